//! Least-squares correlator on standardized `[G, phi, 1]`.

use crate::data::PairedDataset;
use crate::error::{Error, Result};
use crate::linalg::{solve_exact, solve_spd};

use super::{McfModel, ModelKind, Standardizer};
use super::mlp::OutputActivation;

/// Fits `F ~ w . z + b` where `z` is the standardized `[G, phi]` row.
/// Parameters are stored as `[w_1 .. w_p, b]` in standardized units.
pub fn fit_ols(fit: &PairedDataset) -> Result<McfModel> {
    let p = fit.d() + fit.m();
    let n = fit.len();
    if n < p + 1 {
        return Err(Error::InsufficientData(format!(
            "least squares on {p} inputs needs at least {} samples, got {n}",
            p + 1
        )));
    }
    let standardizer = Standardizer::fit(fit);
    let dim = p + 1;
    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    for i in 0..n {
        standardizer.apply_into(fit.g_row(i), fit.phi_row(i), &mut z[..p]);
        z[p] = 1.0;
        let y = fit.f()[i];
        for a in 0..dim {
            rhs[a] += z[a] * y;
            for b in 0..=a {
                gram[a * dim + b] += z[a] * z[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            gram[b * dim + a] = gram[a * dim + b];
        }
    }
    // Standardized columns keep the Gram matrix well scaled; the ridge is
    // only a fallback for collinear inputs.
    let parameters = match solve_exact(&gram, dim, &rhs) {
        Some(w) => w,
        None => solve_spd(&gram, dim, &rhs)?,
    };
    Ok(McfModel {
        kind: ModelKind::Ols,
        d: fit.d(),
        m: fit.m(),
        input_mean: standardizer.mean,
        input_scale: standardizer.scale,
        target_mean: 0.0,
        target_scale: 1.0,
        hidden_layers: Vec::new(),
        output_activation: OutputActivation::Identity,
        parameters,
    })
}
