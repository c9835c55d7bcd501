//! CSV tables. Floats use the shortest decimal that parses back to the same
//! value.

use std::io::{Read, Write};

use crate::dynamics::{ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::experiments::{SweepRecord, SWEEP_COLUMNS};

/// Largest chain whose states are written column by column.
pub const MAX_STATE_COLUMNS: usize = 64;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// `step,tau,t,norm2,mean,maxabs[,y_<label>...]` for every stored step.
/// States are included when the chain has at most [`MAX_STATE_COLUMNS`]
/// agents; `first_label` names the first column.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, first_label: i64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_states = traj.dim() <= MAX_STATE_COLUMNS;
    let mut header: Vec<String> = ["step", "tau", "t", "norm2", "mean", "maxabs"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if with_states {
        header.extend((0..traj.dim()).map(|i| format!("y_{}", first_label + i as i64)));
    }
    w.write_record(&header)?;
    let diag = traj.diagnostics();
    for (state, &step) in traj.states().iter().zip(traj.stored_steps()) {
        let d = diag
            .get(step)
            .copied()
            .unwrap_or_else(|| crate::dynamics::StepDiagnostics::of(state, traj.frame().n));
        let mut row = vec![
            step.to_string(),
            fmt_f64(traj.tau(step)),
            fmt_f64(traj.t(step)),
            fmt_f64(d.norm2),
            fmt_f64(d.mean),
            fmt_f64(d.maxabs),
        ];
        if with_states {
            row.extend(state.iter().map(|&v| fmt_f64(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `step,tau,u_1..u_m`: the value held on each step, in the signal's units,
/// stamped with the step's left knot in rescaled time.
pub fn write_control<W: Write>(out: W, control: &ControlSignal) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "tau".to_string()];
    header.extend((1..=control.n_channels()).map(|c| format!("u_{c}")));
    w.write_record(&header)?;
    let mut vals = vec![0.0; control.n_channels()];
    for k in 0..control.n_steps() {
        control.step_values(k, &mut vals);
        let mut row = vec![k.to_string(), fmt_f64(control.frame().to_tau(control.knot_time(k)))];
        row.extend(vals.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A numeric CSV table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_numeric_table<R: Read>(input: R) -> Result<NumericTable> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Domain(format!("row {}: '{f}' is not a number", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { header, rows })
}

pub fn write_sweep<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.regime.name().to_string(),
            r.horizon_mode.name().to_string(),
            fmt_f64(r.base_t),
            fmt_f64(r.terminal_norm),
            fmt_f64(r.cost_physical),
            fmt_f64(r.cost_rescaled),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.runtime_ms.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::Domain(format!("unexpected sweep header {header:?}")));
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::HorizonMode;
    use crate::network::Scaling;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1e-15, 1.0 / 3.0, 2.5e300, -0.0, 123456789.125, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt_f64(1e-15), "1e-15");
    }

    #[test]
    fn sweep_round_trip() {
        let recs = vec![
            SweepRecord {
                n: 8,
                regime: Scaling::InverseNSquared,
                horizon_mode: HorizonMode::TimeGrowsAsN2,
                base_t: 1.0,
                terminal_norm: 1.234e-7,
                cost_physical: 0.1 + 0.2,
                cost_rescaled: 8.0 * (0.1 + 0.2),
                iterations: 42,
                converged: true,
                runtime_ms: 17,
                status: "ok".into(),
            },
            SweepRecord {
                n: 16,
                regime: Scaling::Unscaled,
                horizon_mode: HorizonMode::FixedT,
                base_t: 0.5,
                terminal_norm: 3.0,
                cost_physical: 1.0 / 3.0,
                cost_rescaled: 16.0 / 3.0,
                iterations: 200,
                converged: false,
                runtime_ms: 9,
                status: "error: a, b".into(),
            },
        ];
        let mut buf = Vec::new();
        write_sweep(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "N,regime,horizon_mode,base_T,terminal_norm,cost_physical,cost_rescaled,iterations,converged,runtime_ms,status\n"
        ));
        assert_eq!(read_sweep(buf.as_slice()).unwrap(), recs);
    }
}
