//! Matrix graph grammar engine.
//!
//! Simple digraphs are stored as Boolean adjacency matrices plus a node
//! presence vector, and rewrite rules ("productions") as pairs of erase and
//! restock bit masks over a shared node universe. Everything else is built on
//! top of that representation:
//!
//! - [`boolalg`] — word-packed Boolean / GF(2) matrix and vector kernels,
//!   permutation actions, Boolean complex matrices and their scalar product,
//!   and the range operators used by the sequence analyses.
//! - [`graph`] — labeled simple digraphs, compatibility (no dangling edges),
//!   completion of two graphs along a node correspondence, complements, and
//!   morphism checking, plus the line-based graph text format.
//! - [`production`] — productions with derived nihilation and forbidden-after
//!   matrices, swap conversion, relabeling, inverses, and exact counting of
//!   swaps and productions per node count.
//! - [`matching`] — injective subgraph matching with nihilation checks,
//!   direct derivations, grammars, and the execution loop with pluggable
//!   election/allocation strategies.
//! - [`sequence`] — rule-sequence analyses: coherence in Boolean and GF(2)
//!   form, minimal/negative initial digraphs, sequence compatibility,
//!   horizontal-determinism classification, the closed-form sequence image,
//!   and a stepwise reference executor used to cross-check all of them.
//! - [`machines`] — compilers from Turing machine state tables and Boolean
//!   circuits into grammars, with encoders/decoders and runners.
//!
//! With the default `parallel` feature the determinism sweep and
//! multi-production matching fan out over rayon; disabling it yields a fully
//! sequential build with identical results.

pub mod boolalg;
pub mod graph;
pub mod machines;
pub mod matching;
pub mod production;
pub mod sequence;
pub mod text;
