//! Gap probabilities and nearest-neighbour spacing distributions for large
//! unitary random matrices, including the leading finite-size correction,
//! and streaming point-process statistics for sequences of zeros.

pub mod error;
pub mod fredholm;
pub mod hexfloat;
pub mod painleve;
pub mod quadrature;
pub mod series;
pub mod spacing;
pub mod zeros;

pub use error::{Error, Result};
pub use painleve::{SolveOptions, ThinningParam, TranscendentKind, TranscendentSolution};
pub use series::{PiecewiseAnalytic, PowerSeries, Segment};
