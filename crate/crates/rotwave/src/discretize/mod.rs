//! Uniform-grid finite differences with Neumann (mirror ghost) boundaries.

mod field;
mod grid;
pub mod io;
mod operator;
pub mod stencil;

pub use field::{ComplexField, Field, RealField};
pub use grid::Grid;
pub use operator::{
    assemble, assemble_adjoint, assemble_linearized, AdjointPair, CsrMatrix, DiscreteOperator, OperatorKind,
};
pub use stencil::{gradient_fields, DriftScheme};

/// theta(x, mu) = exp(mu sqrt(|x|^2 + 1)) at every node.
pub fn weight_field(grid: &Grid, mu: f64) -> RealField {
    Field::from_fn(*grid, 1, |x, o| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        o[0] = (mu * (r2 + 1.0).sqrt()).exp();
    })
}

/// (sum over nodes |theta v|^p h^d)^(1/p), with |.| the Euclidean norm over components.
pub fn weighted_norm(v: &RealField, theta: &RealField, p: f64) -> crate::Result<f64> {
    if v.grid != theta.grid || theta.m != 1 {
        return Err(crate::Error::GridMismatch);
    }
    let s: f64 = v
        .pointwise_norm()
        .iter()
        .zip(&theta.data)
        .map(|(a, t)| (a * t).abs().powf(p))
        .sum();
    Ok((s * v.grid.cell()).powf(1.0 / p))
}
