use std::io::{Read, Write};

use thiserror::Error;

use super::SpikeTrain;
use crate::engine::WaveformSet;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed waveform file: {0}")]
    Format(String),
}

/// Header `time,<channels...>`; one row per sample. Floats are written in
/// shortest round-trip form.
pub fn export_waveforms_csv<W: Write>(w: &WaveformSet, out: W) -> Result<(), ExportError> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend(w.names().map(str::to_string));
    wr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for k in 0..w.len() {
        row.clear();
        row.push(w.time[k].to_string());
        row.extend(w.channels.iter().map(|(_, ch)| ch[k].to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn import_waveforms_csv<R: Read>(input: R) -> Result<WaveformSet, ExportError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.get(0) != Some("time") {
        return Err(ExportError::Format("first column must be `time`".into()));
    }
    let mut w = WaveformSet::new(header.iter().skip(1).map(str::to_string));
    let mut values = Vec::with_capacity(header.len());
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        values.clear();
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                ExportError::Format(format!("row {}: `{field}` is not a number", line + 2))
            })?;
            values.push(v);
        }
        w.push(values[0], &values[1..]);
    }
    Ok(w)
}

/// One row per event across all trains, in the order given.
pub fn export_spikes_csv<W: Write>(trains: &[SpikeTrain], out: W) -> Result<(), ExportError> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["source", "t_peak", "charge", "width", "t_start", "t_end"])?;
    for train in trains {
        for e in &train.events {
            wr.write_record([
                train.source.clone(),
                e.t_peak.to_string(),
                e.charge.to_string(),
                e.width.to_string(),
                e.t_start.to_string(),
                e.t_end.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Gnuplot script stacking every channel of `csv_file` against time.
pub fn plot_script(w: &WaveformSet, csv_file: &str) -> String {
    let n = w.channels.len().max(1);
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set multiplot layout {n},1\n"));
    for (k, name) in w.names().enumerate() {
        let unit = if name.starts_with("v(") { "mV" } else { "uA" };
        s.push_str(&format!("set ylabel '{name} ({unit})'\n"));
        if k + 1 == n {
            s.push_str("set xlabel 'time (ps)'\n");
        }
        s.push_str(&format!("plot '{csv_file}' using 1:{} with lines\n", k + 2));
    }
    s.push_str("unset multiplot\n");
    s
}
