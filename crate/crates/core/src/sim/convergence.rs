//! Self-convergence under uniform refinement.

use std::thread;

use crate::error::{Error, Result};
use crate::grid::{restrict, ScalarField};

use super::{run, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub h: f64,
    /// `|n_h - R n_{h/2}|_{L^1}` on this level's grid, absent on the finest.
    pub l1_difference: Option<f64>,
    /// `log2(e_k / e_{k+1})`, present when both differences exist.
    pub rate: Option<f64>,
}

/// Runs `cfg` on `levels` grids with `n_cells * 2^k` cells up to
/// `t_snapshot`, restricting each finer solution onto the next coarser grid.
/// Levels run concurrently.
pub fn convergence_study(cfg: &SimConfig, levels: usize, t_snapshot: f64) -> Result<Vec<ConvergenceRow>> {
    if levels < 3 {
        return Err(Error::Config(format!("a convergence study needs >= 3 levels, got {levels}")));
    }
    if !(t_snapshot >= 0.0 && t_snapshot.is_finite()) {
        return Err(Error::Config(format!("invalid snapshot time {t_snapshot}")));
    }
    let configs: Vec<SimConfig> = (0..levels)
        .map(|k| SimConfig {
            n_cells: cfg.n_cells << k,
            t_end: t_snapshot,
            output_every: 0,
            output_times: Vec::new(),
            output_dir: None,
            ..cfg.clone()
        })
        .collect();
    let finals: Vec<Result<ScalarField>> = thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run(c).map(|out| out.state.n)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence level panicked"))
            .collect()
    });
    let finals = finals.into_iter().collect::<Result<Vec<_>>>()?;

    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|pair| {
            let coarse = &pair[0];
            let fine = restrict(&pair[1], 2)?;
            Ok(coarse.zip_map(&fine, |a, b| a - b).norm_l1())
        })
        .collect::<Result<_>>()?;

    Ok(finals
        .iter()
        .enumerate()
        .map(|(k, n)| ConvergenceRow {
            n_cells: n.n_cells(),
            h: n.grid().h(),
            l1_difference: diffs.get(k).copied(),
            rate: match (diffs.get(k), diffs.get(k + 1)) {
                (Some(&a), Some(&b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
                _ => None,
            },
        })
        .collect())
}
