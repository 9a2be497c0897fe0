//! Constructive realization of countable scattered order types inside the
//! chain-recurrence structure of concrete transitive systems.
//!
//! The crate builds finite-depth prefixes of nested, acyclic,
//! order-compatible epsilon-chain families between two points and
//! independently re-verifies every claimed property: the hop bounds, the
//! nesting and acyclicity of supports, order compatibility, the orbit
//! class discipline at the endpoints, and that the emerging limit order
//! realizes the requested term, witnessed by a per-point address map.
//!
//! All arithmetic is exact: the odometer runs on odd-denominator
//! rationals under the 2-adic metric, the circle rotation on certified
//! continued-fraction intervals.

pub mod artifact;
pub mod chains;
pub mod classes;
pub mod constructor;
pub mod order;
pub mod schedule;
pub mod systems;
pub mod verifier;

pub use chains::{concat, limit_order, strip_endpoints, EpsilonChain, LimitOrder, NestedFamily};
pub use classes::{AlphaStructure, ClassAllocator, ClassSeed};
pub use constructor::{
    build_basic, build_orbit_chain, build_scattered, realize, transport_family, Address, BasicCase,
    Built, ConstructionTrace, TraceNode,
};
pub use order::{normalize, normalize_sum, parse_term, render_term, OrderTerm, OrdinalCnf};
pub use schedule::EpsSchedule;
pub use systems::{resolve, Conjugacy, Point, System};
pub use verifier::{verify_family, Report};
