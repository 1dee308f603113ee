//! CSV output for sweeps.

use std::io::Write;

use cislp::linear_to_db;
use cislp::linksim::MetricsRecord;

/// One simulated grid point together with the dB value it was run at.
#[derive(Debug, Clone)]
pub struct Row {
    pub variable_db: f64,
    pub record: MetricsRecord,
}

pub fn header(users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["variable_db", "variable_linear", "order", "avg_tx_power", "avg_tx_power_db"]
        .into_iter()
        .map(String::from)
        .collect();
    h.extend((1..=users).map(|j| format!("ser_user_{j}")));
    h.extend((1..=users).map(|j| format!("effective_rate_{j}")));
    h.extend(["energy_efficiency", "ci_lower_bound", "n_fail"].map(String::from));
    h
}

/// Writes the header and one line per row. Floats use Rust's shortest
/// round-trip formatting, which is locale independent.
pub fn write_csv<W: Write>(writer: W, users: usize, rows: &[Row]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(header(users))?;
    for row in rows {
        let r = &row.record;
        let mut fields = vec![
            row.variable_db.to_string(),
            r.point.unwrap_or_else(|| cislp::db_to_linear(row.variable_db)).to_string(),
            r.order.to_string(),
            r.avg_tx_power.to_string(),
            linear_to_db(r.avg_tx_power).to_string(),
        ];
        fields.extend(r.ser.iter().map(f64::to_string));
        fields.extend(r.effective_rate.iter().map(f64::to_string));
        fields.push(r.energy_efficiency.to_string());
        fields.push(r.ci_lower_bound.map(|b| b.to_string()).unwrap_or_default());
        fields.push(r.counts.failed_slots.to_string());
        out.write_record(&fields)?;
    }
    out.flush()?;
    Ok(())
}
