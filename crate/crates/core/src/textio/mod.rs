//! The game-description language and the serializers.
//!
//! A `.game` document declares an arena (agents, their choice spaces, their
//! utility domains with a preference), a block of named state definitions
//! (leaves, nodes, or simultaneous msnodes), a root, and optionally a
//! profile block of `choose` lines. Named states may reference each other
//! cyclically; a cyclic document denotes a regular infinite game. The
//! concrete syntax:
//!
//! ```text
//! # the ying-yang loop
//! arena {
//!   agents A, B;
//!   choices A { down, right };
//!   choices B { down, right };
//!   utility A sym { ying, yang } indifference;
//!   utility B sym { ying, yang } indifference;
//! }
//! def a = node A { down -> la, right -> b };
//! def b = node B { down -> lb, right -> a };
//! def la = leaf { A: ying, B: yang };
//! def lb = leaf { A: yang, B: ying };
//! root a;
//! choose a = right;
//! choose b = right;
//! ```
//!
//! ℕ choice spaces may be declared (`choices Alice naturals;`) but no node
//! owned by such an agent can be written, since branch maps must be total:
//! truly ℕ-branching games stay library-only.

mod parse;
mod render;

pub use parse::{parse_doc, parse_game, parse_ms_game, parse_profile, ParseError, ParsedDoc};
pub use render::{
    export_prefix_json, ms_export_prefix_json, ms_render_ascii, ms_render_dot, render_ascii,
    render_doc, render_dot, render_ms_doc, RenderError,
};
