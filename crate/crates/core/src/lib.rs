//! Progressive-mesh tokenization on a quantized grid.
//!
//! A mesh is quantized to an `N^3` grid, decimated by quadric-error half-edge
//! collapses into a small base mesh plus a sequence of vertex splits, and
//! serialized as tokens. [`decoder::DecoderState`] checks token streams one
//! token at a time so any accepted prefix decodes to a valid manifold mesh.

#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod codec;
pub mod decoder;
pub mod grid;
pub mod manifold;
pub mod mesh;
pub mod metrics;
pub mod progressive;
pub mod quadric;
pub mod sampler;
pub mod shapes;
pub mod simplify;

pub use codec::{
    compression_report, decode_pm, encode_pm, CodecError, CompressionReport, CorpusSummary,
    TokenStream, Vocabulary,
};
pub use decoder::{DecodeError, DecoderState, Phase, Rejection, TokenMask};
pub use grid::{normalize_quantize, GridSpec, QuantizeError, RawMesh};
pub use manifold::{ManifoldReport, Violation};
pub use mesh::{Coord, FaceId, HalfEdgeId, HalfEdgeMesh, MeshError, VertexId};
pub use progressive::{vsplit_apply, ProgressiveMesh, SplitError, VSplitRecord};
pub use simplify::{decimate_to_pm, ecol, is_collapse_valid, CollapseRejection, SimplifyError};
