//! Symbolic-numeric workbench for geometric formulations of constrained
//! variational problems: exact expressions, exterior calculus on coordinate
//! charts, structure classification, equations of motion and integration.

pub mod cli;
pub mod eomsolve;
pub mod excalc;
pub mod geomech;
pub mod linsolve;
pub mod simulate;
pub mod symexpr;
