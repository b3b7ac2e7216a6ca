//! Pulse detection, charge accounting, energy estimates and CSV export.

mod export;

use serde::{Deserialize, Serialize};

use crate::units::{PHI0, TWO_E};

pub use export::{
    export_spikes_csv, export_waveforms_csv, import_waveforms_csv, plot_script, ExportError,
};

/// Quantization tolerance, in units of 2e.
pub const QUANTUM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Trigger level as a fraction of the channel's peak above baseline.
    pub threshold_fraction: f64,
    /// Events whose peaks are closer than this (ps) are merged.
    pub min_separation: f64,
    pub baseline: f64,
    /// Samples within this fraction of the peak of the baseline (either
    /// side) count as quiet when delimiting an event's integration window.
    pub floor_fraction: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.5,
            min_separation: 1.0,
            baseline: 0.0,
            floor_fraction: 1e-3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(format!(
                "threshold_fraction {} outside (0, 1)",
                self.threshold_fraction
            ));
        }
        if !(self.min_separation > 0.0) {
            return Err(format!(
                "min_separation {} must be positive",
                self.min_separation
            ));
        }
        if !(self.floor_fraction >= 0.0 && self.floor_fraction < self.threshold_fraction) {
            return Err("floor_fraction must lie in [0, threshold_fraction)".into());
        }
        if !self.baseline.is_finite() {
            return Err("baseline must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    /// ps
    pub t_peak: f64,
    /// aC, integrated above baseline over the event window.
    pub charge: f64,
    /// Time spent above the trigger level (ps).
    pub width: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub source: String,
    pub events: Vec<SpikeEvent>,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn charges(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.charge)
    }

    pub fn peak_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.t_peak).collect()
    }
}

/// Trapezoidal ∫(y - baseline) dt over samples `lo..=hi`.
pub fn integrate(time: &[f64], y: &[f64], baseline: f64, lo: usize, hi: usize) -> f64 {
    (lo + 1..=hi)
        .map(|k| 0.5 * (y[k] + y[k - 1] - 2.0 * baseline) * (time[k] - time[k - 1]))
        .sum()
}

/// Upward threshold crossings with hysteresis; each event is integrated over
/// the contiguous window in which the channel stays outside the quiet band,
/// so ringing below baseline right after a pulse belongs to that pulse.
/// Events with overlapping windows or peaks closer than `min_separation` are
/// merged.
pub fn detect_pulses(source: &str, time: &[f64], y: &[f64], cfg: &DetectorConfig) -> SpikeTrain {
    let mut train = SpikeTrain {
        source: source.to_string(),
        events: Vec::new(),
    };
    let n = time.len().min(y.len());
    if n < 2 {
        return train;
    }
    let peak = y[..n].iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - cfg.baseline;
    if !(peak > 0.0 && peak.is_finite()) {
        return train;
    }
    let trigger = cfg.baseline + cfg.threshold_fraction * peak;
    let rearm = cfg.baseline + 0.5 * cfg.threshold_fraction * peak;
    let quiet = cfg.floor_fraction * peak;

    // (window lo, window hi, first trigger index, samples above trigger)
    let mut windows: Vec<(usize, usize)> = Vec::new();
    let mut armed = true;
    for k in 0..n {
        if armed && y[k] > trigger {
            armed = false;
            if windows.last().is_some_and(|w| k <= w.1) {
                continue;
            }
            let mut lo = k;
            while lo > 0 && (y[lo - 1] - cfg.baseline).abs() > quiet {
                lo -= 1;
            }
            let mut hi = k;
            while hi + 1 < n && (y[hi + 1] - cfg.baseline).abs() > quiet {
                hi += 1;
            }
            // Include the bounding quiet samples so the trapezoids reach the floor.
            windows.push((lo.saturating_sub(1), (hi + 1).min(n - 1)));
        } else if !armed && y[k] < rearm {
            armed = true;
        }
    }

    let mut events: Vec<SpikeEvent> = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for (lo, hi) in windows {
        let (t_peak, _) = (lo..=hi).fold((time[lo], f64::NEG_INFINITY), |acc, k| {
            if y[k] > acc.1 {
                (time[k], y[k])
            } else {
                acc
            }
        });
        let merge = match (events.last(), spans.last()) {
            (Some(prev), Some(span)) => t_peak - prev.t_peak < cfg.min_separation || lo < span.1,
            _ => false,
        };
        if merge {
            let span = spans.last_mut().unwrap();
            span.1 = span.1.max(hi);
            let (a, b) = *span;
            let prev = events.last_mut().unwrap();
            *prev = event_over(time, y, a, b, trigger, cfg.baseline);
        } else {
            spans.push((lo, hi));
            events.push(event_over(time, y, lo, hi, trigger, cfg.baseline));
        }
    }
    train.events = events;
    train
}

fn event_over(
    time: &[f64],
    y: &[f64],
    lo: usize,
    hi: usize,
    trigger: f64,
    baseline: f64,
) -> SpikeEvent {
    let mut k_peak = lo;
    for k in lo..=hi {
        if y[k] > y[k_peak] {
            k_peak = k;
        }
    }
    let width = (lo + 1..=hi)
        .filter(|&k| y[k] > trigger && y[k - 1] > trigger)
        .map(|k| time[k] - time[k - 1])
        .sum();
    SpikeEvent {
        t_peak: time[k_peak],
        charge: integrate(time, y, baseline, lo, hi),
        width,
        t_start: time[lo],
        t_end: time[hi],
    }
}

/// Charge delivered outside all event windows.
pub fn baseline_charge(time: &[f64], y: &[f64], train: &SpikeTrain, baseline: f64) -> f64 {
    let n = time.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut k = 1;
    let mut ev = train.events.iter().peekable();
    while k < n {
        while ev.peek().is_some_and(|e| e.t_end <= time[k - 1]) {
            ev.next();
        }
        let inside = ev
            .peek()
            .is_some_and(|e| e.t_start <= time[k - 1] && time[k] <= e.t_end);
        if !inside {
            total += 0.5 * (y[k] + y[k - 1] - 2.0 * baseline) * (time[k] - time[k - 1]);
        }
        k += 1;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumCheck {
    pub multiple: i64,
    /// charge/2e minus `multiple`.
    pub residual: f64,
    pub quantized: bool,
}

/// Round each event charge to a whole number of Cooper pairs.
pub fn pulse_charge_quantum_check(train: &SpikeTrain) -> Vec<QuantumCheck> {
    train.charges().map(quantum_check).collect()
}

pub fn quantum_check(charge: f64) -> QuantumCheck {
    let x = charge / TWO_E;
    // Ties round up: 1.5 -> 2.
    let multiple = (x + 0.5).floor();
    let residual = x - multiple;
    QuantumCheck {
        multiple: multiple as i64,
        residual,
        quantized: residual.abs() < QUANTUM_TOLERANCE,
    }
}

/// Charge passed between the ends of consecutive event windows; the first
/// entry runs from the end of event 0 to the end of event 1.
///
/// Junctions in blockade move polarization charge between pulses, so the
/// charge of one full cycle is the quantity that is exactly quantized.
pub fn cycle_charges(time: &[f64], y: &[f64], train: &SpikeTrain) -> Vec<f64> {
    let idx = |t: f64| time.partition_point(|x| *x < t).min(time.len() - 1);
    train
        .events
        .windows(2)
        .map(|w| integrate(time, y, 0.0, idx(w[0].t_end), idx(w[1].t_end)))
        .collect()
}

/// 2e·Vc in zJ for Vc in mV.
pub fn switching_energy(vc: f64) -> f64 {
    TWO_E * vc
}

/// Ic·Φ0 in zJ for Ic in µA, for comparison with junction logic.
pub fn jj_switching_energy(ic: f64) -> f64 {
    ic * PHI0
}

/// A neuron firing switches Q0 and all N parallel junctions once.
pub fn neuron_firing_energy(n: usize, vc: f64) -> f64 {
    (n + 1) as f64 * switching_energy(vc)
}

/// Events per unit time; with `window` in ps the result is in THz.
pub fn firing_rate(train: &SpikeTrain, window: f64) -> f64 {
    if window > 0.0 {
        train.len() as f64 / window
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Triangular pulses of the given area (aC) centred at `centres`.
    fn triangles(
        dt: f64,
        t_end: f64,
        centres: &[f64],
        half_width: f64,
        area: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = (t_end / dt).round() as usize + 1;
        let time: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let height = area / half_width;
        let y = time
            .iter()
            .map(|t| {
                centres
                    .iter()
                    .map(|c| (height * (1.0 - (t - c).abs() / half_width)).max(0.0))
                    .sum()
            })
            .collect();
        (time, y)
    }

    #[test]
    fn zero_waveform() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let y = vec![0.0; 100];
        assert!(detect_pulses("i", &t, &y, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn two_triangles() {
        let (t, y) = triangles(0.01, 100.0, &[20.0, 60.0], 2.0, TWO_E);
        let train = detect_pulses("i", &t, &y, &DetectorConfig::default());
        assert_eq!(train.len(), 2);
        for e in &train.events {
            assert!((e.charge - TWO_E).abs() < 1e-9 * TWO_E, "{}", e.charge);
        }
        assert!((train.events[0].t_peak - 20.0).abs() < 1e-9);
        assert!((train.events[0].width - 2.0).abs() < 0.05);
    }

    #[test]
    fn close_peaks_merge() {
        let (t, y) = triangles(0.01, 50.0, &[20.0, 20.5], 0.2, TWO_E);
        let cfg = DetectorConfig {
            floor_fraction: 0.0,
            ..DetectorConfig::default()
        };
        let train = detect_pulses("i", &t, &y, &cfg);
        assert_eq!(train.len(), 1);
        assert!((train.events[0].charge - 2.0 * TWO_E).abs() < 1e-9);
    }

    #[test]
    fn quantum_rounding() {
        let c = quantum_check(TWO_E);
        assert_eq!((c.multiple, c.quantized), (1, true));
        let c = quantum_check(1.5 * TWO_E);
        assert_eq!((c.multiple, c.quantized), (2, false));
        assert!((c.residual + 0.5).abs() < 1e-12);
        assert_eq!(quantum_check(10.02 * TWO_E).multiple, 10);
    }

    #[test]
    fn energies() {
        assert!((switching_energy(10.0) - 3.204353).abs() < 1e-9);
        assert_eq!(switching_energy(0.0), 0.0);
        assert!((neuron_firing_energy(10, 10.0) - 35.247883).abs() < 1e-6);
        assert!((firing_rate(&SpikeTrain::default(), 1200.0)).abs() < 1e-15);
    }

    #[test]
    fn cycles_of_sawtooth() {
        // Slow positive ramp plus a fast pulse each 100 ps: the cycle
        // charge covers both.
        let dt = 0.01;
        let n = 50_001;
        let time: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = time
            .iter()
            .map(|t| {
                let ph = t % 100.0;
                0.001
                    + if (ph - 50.0).abs() < 1.0 {
                        1.0 - (ph - 50.0).abs()
                    } else {
                        0.0
                    }
            })
            .collect();
        let cfg = DetectorConfig {
            floor_fraction: 0.01,
            ..DetectorConfig::default()
        };
        let train = detect_pulses("i", &time, &y, &cfg);
        assert_eq!(train.len(), 5);
        for q in cycle_charges(&time, &y, &train) {
            assert!((q - 1.1).abs() < 1e-6, "{q}");
        }
    }

    proptest! {
        #[test]
        fn charge_additivity(centres in proptest::collection::vec(5.0f64..95.0, 0..6), hw in 0.1f64..3.0, area in 0.01f64..5.0, offset in -0.01f64..0.01) {
            let (t, mut y) = triangles(0.01, 100.0, &centres, hw, area);
            for v in &mut y { *v += offset; }
            let train = detect_pulses("i", &t, &y, &DetectorConfig::default());
            let total = integrate(&t, &y, 0.0, 0, t.len() - 1);
            let split: f64 = train.charges().sum::<f64>() + baseline_charge(&t, &y, &train, 0.0);
            prop_assert!((split - total).abs() <= 1e-6 * total.abs().max(1e-3));
        }

        #[test]
        fn shift_and_scale_invariance(centres in proptest::collection::vec(5.0f64..80.0, 1..5), shift in 0.0f64..10.0, k in 1.0f64..20.0) {
            let (t, y) = triangles(0.01, 100.0, &centres, 0.5, 1.0);
            let cfg = DetectorConfig::default();
            let base = detect_pulses("i", &t, &y, &cfg).len();
            let shifted: Vec<f64> = t.iter().map(|x| x + shift).collect();
            prop_assert_eq!(detect_pulses("i", &shifted, &y, &cfg).len(), base);
            let scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
            prop_assert_eq!(detect_pulses("i", &t, &scaled, &cfg).len(), base);
        }

        #[test]
        fn energy_linear(vc in 0.0f64..50.0, k in 0.0f64..10.0) {
            prop_assert!((switching_energy(k * vc) - k * switching_energy(vc)).abs() <= 1e-12 * (1.0 + switching_energy(k * vc)));
        }
    }
}
