//! CSV emission: fixed schemas, 12 significant digits, atomic writes.

use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;

pub const AWGN_COLUMNS: [&str; 16] = [
    "n",
    "epsilon",
    "lambda_star",
    "mode",
    "ach_log2M",
    "conv_log2M",
    "ach_rate",
    "conv_rate",
    "capacity_bits",
    "N_n",
    "eps_n",
    "delta_n",
    "tau_n",
    "zeta_n",
    "valid_ach",
    "valid_conv",
];

pub const DMC_COLUMNS: [&str; 11] = [
    "n",
    "epsilon",
    "eta",
    "C_ED_bits",
    "V_star",
    "ach_log2M",
    "conv_log2M",
    "multiplier",
    "eps_R",
    "valid_ach",
    "valid_conv",
];

pub const SIM_COLUMNS: [&str; 7] = ["event", "empirical", "ci_low", "ci_high", "analytic_bound", "trials", "seed"];

pub const AWGN_UNITS: &str =
    "# units: log2M, rates, capacity and zeta_n in bits (nats divided by ln 2); energies and delta_n in the arrival unit";
pub const DMC_UNITS: &str =
    "# units: C_ED_bits and log2M in bits, V_star in bits^2, multiplier in bits per unit cost (nats divided by ln 2)";
pub const SIM_UNITS: &str = "# units: probabilities, no conversion applied";

/// `v` with 12 significant digits, trailing zeros trimmed.
pub fn fmt12(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let s = format!("{v:.11e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{e}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Renders the whole file: units comment, header, rows.
pub fn render(units: &str, columns: &[&str], rows: &[Vec<String>]) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "{units}")?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

/// Writes through a temporary file in the target directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
