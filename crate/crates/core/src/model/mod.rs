//! Operator family φ (with Φ) and nonlinearity family f (with F).

mod nonlinearity;
mod phi;

pub use nonlinearity::{
    antiderivative, bounds_at, constant_source, eval_f, integrate_f, make_example_nonlinearity,
    CustomNonlinearity, Nonlinearity, PaperExample, Site, DEFAULT_F_TOL,
};
pub use phi::{
    make_p_laplacian, make_regularized_power, EllipticityConstants, PLaplacian, PhiOperator,
    RegularizedPower,
};
