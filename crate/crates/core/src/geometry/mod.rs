//! Box domains, the `eps^r` cube covering, parallelepiped cell coverings of
//! single cubes and the smooth cube cutoffs.

mod cells;
mod covering;
mod cutoff;
mod domain;

pub use cells::{build_cell_covering, CellCovering};
pub use covering::{build_covering, AnchorRule, Covering, CoveringFile, CoveringOptions, Cube, CubeRecord};
pub use cutoff::{mollified_cutoff, BumpProfile, CutoffDefect, MollifiedCutoff};
pub use domain::DomainBox;
