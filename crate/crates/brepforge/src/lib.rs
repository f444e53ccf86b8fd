//! brepforge: a feature-based CAD engine whose refinement operations (fillet,
//! chamfer, shell) can reference B-Rep primitives through natural-language
//! queries, resolved by a trainable grounding transformer.
//!
//! The workspace is organized around the execution pipeline:
//!
//! * [`kernel`] — boundary-representation state (`Solid`), the feature
//!   transition operator (sketch/extrude/revolve/fillet/chamfer/shell/boolean),
//!   stable primitive enumeration and validity checking.
//! * [`dsl`] — the `.cads` program grammar, parser, emitter and interpreter.
//! * [`selector`] — deterministic rule-based primitive selection expressions.
//! * [`corpus`] — procedural program/query/label generation for training.
//! * [`ground`] — the grounding transformer (UV-grid + attribute encoders,
//!   graph message passing, self/cross-attention fusion, per-token scoring).
//! * [`metrics`] — Chamfer Distance, command-level F1, invalidity ratio and
//!   ranking metrics (Recall@k, mAP, F1).
//! * [`policy`] — sequence-level clipped policy-optimization math (group
//!   advantages, importance-ratio loss) and Chamfer-Distance rewards.

pub mod geom;
pub mod ids;
pub mod mesh;

pub mod exact;

pub mod kernel;

// pub mod selector;

// pub mod dsl;

// pub mod metrics;

// pub mod corpus;

// pub mod nn;
// pub mod ground;

// pub mod policy;

// pub mod seed;
