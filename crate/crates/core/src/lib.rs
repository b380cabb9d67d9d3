//! Approximation of black-box trivariate functions on `[-1, 1]^3` in a
//! functional Tucker format.
//!
//! The approximant has the form `f(x, y, z) ≈ C ×₁ U(x) ×₂ V(y) ×₃ W(z)`
//! where `C` is a small core tensor and the columns of `U`, `V`, `W` are
//! univariate Chebyshev interpolants. It is built from function fibers:
//!
//! 1. alternating cross approximation on lazily sampled coarse grids picks
//!    fibers in each mode,
//! 2. the selected fibers are refined on nested Chebyshev grids until their
//!    coefficients decay below the tolerance,
//! 3. DEIM-selected indices define oblique projections, so the core needs only
//!    `r1 * r2 * r3` additional samples. The result is checked at Halton
//!    points and the construction restarts on a finer coarse grid if needed.
//!
//! ```
//! use tuckercheb::{approximate, ConstructorConfig};
//!
//! let cfg = ConstructorConfig { tol: 1e-10, ..Default::default() };
//! let approx = approximate(|x, y, z| (x + y * z).exp(), &cfg).unwrap();
//! let (x, y, z) = (0.3, -0.2, 0.7);
//! assert!((approx.approximant.evaluate(x, y, z) - (x + y * z).exp()).abs() < 1e-8);
//! ```

pub mod approximator;
pub mod catalog;
pub mod chebyshev;
pub mod cross;
mod error;
pub mod funcexpr;
pub mod study;
pub mod tensor;

pub use approximator::{
    approximate, Approximation, ConstructionStats, ConstructorConfig, InstrumentedOracle, TuckerApproximant,
};
pub use chebyshev::ChebSeries;
pub use error::{Error, Result};
pub use funcexpr::FuncExpr;
pub use tensor::{DenseTensor3, Mode};
