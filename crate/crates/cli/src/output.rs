use std::io::{self, Write};
use std::path::{Path, PathBuf};

use qbtransfer::EnergyTrace;

use crate::config::Method;
use crate::runner::SweepRow;

pub const TRACE_HEADER: &str = "g_t,omega_b_t,E_B,E_C,E_M";
pub const SWEEP_HEADER: &str = "g_over_omega_b,scenario,omega_b_t_max,method";

/// Twelve significant digits in scientific notation; negative zero prints as
/// zero so identical physics gives identical bytes.
pub fn format_value(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// Writes `trace` with times as `g t` and `omega_b t` and energies as
/// fractions of `omega_b`.
pub fn write_trace<W: Write>(
    mut w: W,
    trace: &EnergyTrace,
    g: f64,
    omega_b: f64,
) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for i in 0..trace.len() {
        let t = trace.times()[i];
        let e_m = trace
            .e_m()
            .map(|m| format_value(m[i] / omega_b))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            format_value(g * t),
            format_value(omega_b * t),
            format_value(trace.e_b()[i] / omega_b),
            format_value(trace.e_c()[i] / omega_b),
            e_m
        )?;
    }
    Ok(())
}

pub fn write_sweep<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            format_value(r.g_over_omega_b),
            r.scenario.name(),
            format_value(r.omega_b_t_max),
            r.method
        )?;
    }
    Ok(())
}

/// `dir/stem.ext` becomes `dir/stem_<suffix>.ext`.
pub fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

pub fn trace_path(base: &Path, method: Method) -> PathBuf {
    suffixed(base, method.name())
}
