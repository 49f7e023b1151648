//! Generalized σ-rearrangements, refined Hardy-Littlewood inequalities and
//! stability certificates for 2D Euler and gravitational Vlasov-Poisson
//! steady states.

pub mod certify;
pub mod convexity;
pub mod error;
pub mod euler2d;
pub mod grid;
pub mod measure;
pub mod numeric;
pub mod rng;
pub mod sigma;
pub mod vlasov;

pub use error::{Result, RlabError};
pub use measure::{AtomicFunction, Carrier, Cell, Continuity, Domain, DomainKind, Monotonicity, StepProfile};
pub use sigma::{sigma_rearrange, schwarz_rearrange, ClosedForm, Jacobian, SigmaFamily, SigmaField, SigmaSpec};
pub use certify::{Certificate, InequalityId, Relation, Status};
pub use convexity::{ConvexCurve, KConstant, KMethod};
pub use euler2d::{SteadyStateEuler, VorticityField};
pub use vlasov::{build_steady_vp, SteadyStateVP};
