use std::fmt::Write as _;

use hdvar::wishart::{check_points, closed_form_moment, letac_reconstruction, mc_moment_oracle, MomentId};
use serde::Serialize;

use crate::exit::CliResult;

/// Largest accepted `|z|` between the Monte Carlo mean and the closed form.
pub const MAX_ABS_Z: f64 = 4.0;
/// Largest accepted relative gap between the closed form and the Letac
/// expansion.
pub const MAX_LETAC_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub point: &'static str,
    pub moment: MomentId,
    pub closed_form: f64,
    pub letac: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub z: f64,
    pub pass: bool,
}

/// Compares the three moment routes at the reference points. All cases
/// share the same simulated Wishart draws for a given point.
pub fn run_moment_checks(
    draws: usize,
    seed: u64,
    case: Option<MomentId>,
    point: Option<&str>,
) -> CliResult<Vec<MomentCheck>> {
    let mut out = Vec::new();
    for p in check_points().into_iter().filter(|p| point.is_none_or(|name| name == p.name)) {
        let ms = p.moments();
        for id in MomentId::ALL.into_iter().filter(|id| case.is_none_or(|c| c == *id)) {
            let closed_form = closed_form_moment(id, &ms, p.n)?;
            let letac = letac_reconstruction(id, &p.beta, &p.sigma, p.n)?;
            let (mc_mean, mc_stderr) = mc_moment_oracle(id, &p.beta, &p.sigma, p.n, draws, seed)?;
            let z = (mc_mean - closed_form) / mc_stderr;
            let letac_ok = (letac - closed_form).abs() <= MAX_LETAC_REL * closed_form.abs().max(f64::MIN_POSITIVE);
            out.push(MomentCheck {
                point: p.name,
                moment: id,
                closed_form,
                letac,
                mc_mean,
                mc_stderr,
                z,
                pass: z.abs() <= MAX_ABS_Z && letac_ok,
            });
        }
    }
    Ok(out)
}

pub fn render_checks(checks: &[MomentCheck]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:<14} {:>16} {:>16} {:>16} {:>12} {:>7}  result",
        "point", "moment", "closed form", "letac", "mc mean", "mc stderr", "z"
    );
    for c in checks {
        let _ = writeln!(
            out,
            "{:<9} {:<14} {:>16.6} {:>16.6} {:>16.6} {:>12.4} {:>7.2}  {}",
            c.point,
            c.moment.as_str(),
            c.closed_form,
            c.letac,
            c.mc_mean,
            c.mc_stderr,
            c.z,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}
