use qpsj::analysis::integrate;
use qpsj::engine::SolverConfig;
use qpsj::harness::figures::{quanta, simulate, switching, ScenarioRun};
use qpsj::templates::{
    build_binary_synapse, build_network, build_neuron, NetworkSpec, NeuronParams,
    SynapseBinaryParams,
};
use qpsj::units::TWO_E;

fn neuron(n: usize, tstop: f64) -> (NeuronParams, ScenarioRun) {
    let p = NeuronParams {
        n_threshold: n,
        tstop,
        ..NeuronParams::default()
    };
    let run = simulate("t", build_neuron(&p).unwrap(), &SolverConfig::default()).unwrap();
    (p, run)
}

fn firings(run: &ScenarioRun, probe: &str) -> usize {
    switching(run.train(probe).unwrap()).len()
}

#[test]
fn single_threshold_fires_on_every_input() {
    let (p, run) = neuron(1, 1000.0);
    let inputs = p.input.count_before(p.tstop);
    assert_eq!(firings(&run, "i(vout)"), inputs);
}

#[test]
fn threshold_is_exact_for_small_n() {
    for n in [2, 3, 5] {
        // Stop halfway between inputs so every input has settled.
        let (p, run) = neuron(n, 10.0 + 120.0 * (3 * n) as f64 + 60.0);
        let inputs = p.input.count_before(p.tstop);
        assert_eq!(inputs, 3 * n + 1);
        assert_eq!(firings(&run, "i(vout)"), inputs / n, "N={n}");
    }
}

#[test]
fn neuron_without_input_stays_quiet() {
    let mut p = NeuronParams {
        tstop: 1000.0,
        ..NeuronParams::default()
    };
    p.input.delay = 2000.0;
    let run = simulate("t", build_neuron(&p).unwrap(), &SolverConfig::default()).unwrap();
    assert_eq!(firings(&run, "i(vout)"), 0);
    assert_eq!(quanta(run.train("i(q0)").unwrap()), 0);
}

#[test]
fn zero_weight_synapse_blocks_charge() {
    let p = SynapseBinaryParams::with_state(1);
    let run = simulate(
        "t",
        build_binary_synapse(&p).unwrap(),
        &SolverConfig::default(),
    )
    .unwrap();
    let i = run.waveforms.get("i(vout)").unwrap();
    let total = integrate(&run.waveforms.time, i, 0.0, 0, i.len() - 1);
    assert_eq!(quanta(run.train("i(vout)").unwrap()), 0);
    // Only polarization charge, well under one pair, crosses Q1.
    assert!(total.abs() < 0.2 * TWO_E, "{}", total / TWO_E);
}

#[test]
fn network_with_zero_weights_never_fires() {
    let spec = NetworkSpec {
        tstop: 1200.0,
        ..NetworkSpec::with_weights(vec![vec![0, 0, 0], vec![0, 0, 0]])
    };
    let run = simulate("t", build_network(&spec).unwrap(), &SolverConfig::default()).unwrap();
    for j in 0..spec.n_outputs {
        let name = format!("i({})", NetworkSpec::output_name(j).to_lowercase());
        assert_eq!(firings(&run, &name), 0);
        assert_eq!(spec.delivered_pulses(j), 0);
    }
}

#[test]
fn network_rejects_ragged_weights() {
    let spec = NetworkSpec::with_weights(vec![vec![1, 1], vec![0, 1, 1]]);
    assert!(build_network(&spec).is_err());
}
