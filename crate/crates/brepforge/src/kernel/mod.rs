//! Boundary-representation kernel: evolving solid state plus the feature
//! transition operator (sketch, extrude, revolve, fillet, chamfer, shell,
//! booleans) with stable primitive enumeration and validity checking.

pub mod boolean;
pub mod cdt;
