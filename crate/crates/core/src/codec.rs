//! Token vocabulary and progressive-mesh serialization.
//!
//! Stream layout: `BOS`, the base mesh as 9 coordinate tokens per face in
//! canonical order, `SEP`, then one group per split (`v_s v_l v_r v_t`, where
//! a missing side is the single token `NIL`), then `EOS`.

use alloc::vec::Vec;

use crate::decoder::{DecodeError, DecoderState};
use crate::grid::{GridSpec, MAX_BINS};
use crate::mesh::{Coord, HalfEdgeMesh};
use crate::progressive::{partition_ring, vsplit_apply, ProgressiveMesh, SplitError, VSplitRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("grid resolution {0} outside [2, {MAX_BINS}]")]
    BadResolution(u32),
    #[error("coordinate {coord} does not fit a grid of {n_bins} bins")]
    CoordinateOutOfRange { coord: Coord, n_bins: u32 },
    #[error("split record has NIL on both sides")]
    BothNil,
    #[error("base mesh has no faces")]
    EmptyBase,
    #[error("replaying splits failed: {0}")]
    Split(#[from] SplitError),
}

/// Token ids for a grid of `N` bins: coordinates `0..N`, then `BOS`, `SEP`,
/// `EOS`, `NIL`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    n_bins: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Token {
    Coord(u16),
    Bos,
    Sep,
    Eos,
    Nil,
}

impl Vocabulary {
    pub fn new(n_bins: u32) -> Result<Self, CodecError> {
        if !(2..=MAX_BINS).contains(&n_bins) {
            return Err(CodecError::BadResolution(n_bins));
        }
        Ok(Self {
            n_bins: n_bins as u16,
        })
    }

    pub fn n_bins(&self) -> u32 {
        self.n_bins as u32
    }

    pub fn bos(&self) -> u16 {
        self.n_bins
    }

    pub fn sep(&self) -> u16 {
        self.n_bins + 1
    }

    pub fn eos(&self) -> u16 {
        self.n_bins + 2
    }

    pub fn nil(&self) -> u16 {
        self.n_bins + 3
    }

    /// Number of token ids, `N + 4`.
    pub fn size(&self) -> usize {
        self.n_bins as usize + 4
    }

    pub fn classify(&self, token: u16) -> Option<Token> {
        let n = self.n_bins;
        match token {
            t if t < n => Some(Token::Coord(t)),
            t if t == n => Some(Token::Bos),
            t if t == n + 1 => Some(Token::Sep),
            t if t == n + 2 => Some(Token::Eos),
            t if t == n + 3 => Some(Token::Nil),
            _ => None,
        }
    }

    fn check(&self, c: Coord) -> Result<(), CodecError> {
        if c.max_component() >= self.n_bins {
            return Err(CodecError::CoordinateOutOfRange {
                coord: c,
                n_bins: self.n_bins(),
            });
        }
        Ok(())
    }
}

/// Token sequence together with the grid resolution it was written for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenStream {
    pub n_bins: u32,
    pub tokens: Vec<u16>,
}

impl TokenStream {
    pub fn vocabulary(&self) -> Result<Vocabulary, CodecError> {
        Vocabulary::new(self.n_bins)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn push_coord(out: &mut Vec<u16>, c: Coord) {
    out.extend_from_slice(&c.to_array());
}

/// Base mesh faces in canonical order, 9 tokens each.
pub fn encode_m0(mesh: &HalfEdgeMesh, vocab: &Vocabulary) -> Result<Vec<u16>, CodecError> {
    let mut out = Vec::with_capacity(9 * mesh.face_count());
    for tri in mesh.canonical_face_coords() {
        for c in tri {
            vocab.check(c)?;
            push_coord(&mut out, c);
        }
    }
    Ok(out)
}

/// One split group: 12 tokens, or 10 when a side is `NIL`.
pub fn encode_vsplit(rec: &VSplitRecord, vocab: &Vocabulary) -> Result<Vec<u16>, CodecError> {
    if rec.l.is_none() && rec.r.is_none() {
        return Err(CodecError::BothNil);
    }
    let mut out = Vec::with_capacity(12);
    vocab.check(rec.s)?;
    push_coord(&mut out, rec.s);
    for side in [rec.l, rec.r] {
        match side {
            Some(c) => {
                vocab.check(c)?;
                push_coord(&mut out, c);
            }
            None => out.push(vocab.nil()),
        }
    }
    vocab.check(rec.t)?;
    push_coord(&mut out, rec.t);
    Ok(out)
}

pub fn encode_pm(pm: &ProgressiveMesh) -> Result<TokenStream, CodecError> {
    let vocab = Vocabulary::new(pm.grid.n_bins)?;
    if pm.base.face_count() == 0 {
        return Err(CodecError::EmptyBase);
    }
    let mut tokens = Vec::with_capacity(3 + 9 * pm.base.face_count() + 12 * pm.records.len());
    tokens.push(vocab.bos());
    tokens.extend(encode_m0(&pm.base, &vocab)?);
    tokens.push(vocab.sep());
    for rec in &pm.records {
        tokens.extend(encode_vsplit(rec, &vocab)?);
    }
    tokens.push(vocab.eos());
    Ok(TokenStream {
        n_bins: vocab.n_bins(),
        tokens,
    })
}

/// Decodes a complete stream. The grid carries only the resolution; model-space
/// placement is not part of the stream.
pub fn decode_pm(stream: &TokenStream) -> Result<ProgressiveMesh, DecodeError> {
    let mut dec = DecoderState::new(stream.n_bins)?;
    for &tok in &stream.tokens {
        dec.step(tok)?;
    }
    dec.into_progressive(GridSpec::unit(stream.n_bins))
}

/// Split group written without half-edge orientation: the plain record plus
/// one extra vertex from the side of the ring that moves to `t`.
pub fn encode_vsplit_no_halfedge(
    rec: &VSplitRecord,
    extra: Coord,
    vocab: &Vocabulary,
) -> Result<Vec<u16>, CodecError> {
    let mut out = encode_vsplit(rec, vocab)?;
    vocab.check(extra)?;
    push_coord(&mut out, extra);
    Ok(out)
}

/// Vertex that tells the two ring arcs apart when orientation is unavailable:
/// the first neighbor moving to `t`, else the first staying with `s`, else
/// whichever side vertex exists.
pub fn disambiguating_vertex(mesh: &HalfEdgeMesh, rec: &VSplitRecord) -> Result<Coord, SplitError> {
    let s = mesh
        .vertex_at(rec.s)
        .ok_or(SplitError::UnknownSource(rec.s))?;
    let l = rec.l.and_then(|c| mesh.vertex_at(c));
    let r = rec.r.and_then(|c| mesh.vertex_at(c));
    let part = partition_ring(mesh, s, l, r)?;
    let v = part
        .moved
        .first()
        .or(part.stay.first())
        .copied()
        .or(l)
        .or(r)
        .expect("at least one side is present");
    Ok(mesh.coord(v)?)
}

/// Full stream in the orientation-free variant, for size comparison.
pub fn encode_pm_no_halfedge(pm: &ProgressiveMesh) -> Result<TokenStream, CodecError> {
    let vocab = Vocabulary::new(pm.grid.n_bins)?;
    let mut tokens = Vec::new();
    tokens.push(vocab.bos());
    tokens.extend(encode_m0(&pm.base, &vocab)?);
    tokens.push(vocab.sep());
    let mut mesh = pm.base.clone();
    for rec in &pm.records {
        let extra = disambiguating_vertex(&mesh, rec)?;
        tokens.extend(encode_vsplit_no_halfedge(rec, extra, &vocab)?);
        vsplit_apply(&mut mesh, rec)?;
    }
    tokens.push(vocab.eos());
    Ok(TokenStream {
        n_bins: vocab.n_bins(),
        tokens,
    })
}

/// Token counts of a progressive mesh against a plain 9-tokens-per-face listing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionReport {
    pub base_faces: usize,
    pub interior_splits: usize,
    pub boundary_splits: usize,
    /// Faces of the fully refined mesh.
    pub faces: usize,
    /// Stream length including `BOS`, `SEP` and `EOS`.
    pub tokens: usize,
    /// Stream length without the three special tokens.
    pub payload_tokens: usize,
    /// `payload_tokens / 9F`.
    pub ratio: f64,
    /// `tokens / 9F`.
    pub ratio_with_specials: f64,
    /// Share of payload tokens spent on the base mesh.
    pub base_fraction: f64,
    /// Share of splits that have a `NIL` side.
    pub boundary_fraction: f64,
    /// Payload length of the orientation-free variant (3 more tokens per split).
    pub no_half_edge_payload: usize,
    pub no_half_edge_ratio: f64,
}

impl CompressionReport {
    pub fn new(base_faces: usize, interior_splits: usize, boundary_splits: usize) -> Self {
        let faces = base_faces + 2 * interior_splits + boundary_splits;
        let payload = 9 * base_faces + 12 * interior_splits + 10 * boundary_splits;
        let splits = interior_splits + boundary_splits;
        let baseline = (9 * faces) as f64;
        let nhe = payload + 3 * splits;
        Self {
            base_faces,
            interior_splits,
            boundary_splits,
            faces,
            tokens: payload + 3,
            payload_tokens: payload,
            ratio: payload as f64 / baseline,
            ratio_with_specials: (payload + 3) as f64 / baseline,
            base_fraction: (9 * base_faces) as f64 / payload as f64,
            boundary_fraction: if splits == 0 {
                0.0
            } else {
                boundary_splits as f64 / splits as f64
            },
            no_half_edge_payload: nhe,
            no_half_edge_ratio: nhe as f64 / baseline,
        }
    }
}

pub fn compression_report(pm: &ProgressiveMesh) -> CompressionReport {
    CompressionReport::new(
        pm.base.face_count(),
        pm.interior_splits(),
        pm.boundary_splits(),
    )
}

/// Aggregate over many meshes. Ratios and base shares are per-mesh means;
/// the boundary share and the no-half-edge overhead pool all splits/tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorpusSummary {
    pub meshes: usize,
    pub mean_ratio: f64,
    pub mean_ratio_with_specials: f64,
    pub mean_base_fraction: f64,
    pub mean_base_face_fraction: f64,
    pub boundary_fraction: f64,
    pub mean_no_half_edge_ratio: f64,
    /// `sum(no-half-edge payload) / sum(payload) - 1`.
    pub no_half_edge_overhead: f64,
}

impl CorpusSummary {
    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a CompressionReport>) -> Self {
        let mut s = CorpusSummary::default();
        let (mut splits, mut bnd, mut payload, mut nhe) = (0usize, 0usize, 0usize, 0usize);
        for r in reports {
            s.meshes += 1;
            s.mean_ratio += r.ratio;
            s.mean_ratio_with_specials += r.ratio_with_specials;
            s.mean_base_fraction += r.base_fraction;
            s.mean_base_face_fraction += r.base_faces as f64 / r.faces as f64;
            s.mean_no_half_edge_ratio += r.no_half_edge_ratio;
            splits += r.interior_splits + r.boundary_splits;
            bnd += r.boundary_splits;
            payload += r.payload_tokens;
            nhe += r.no_half_edge_payload;
        }
        if s.meshes > 0 {
            let n = s.meshes as f64;
            s.mean_ratio /= n;
            s.mean_ratio_with_specials /= n;
            s.mean_base_fraction /= n;
            s.mean_base_face_fraction /= n;
            s.mean_no_half_edge_ratio /= n;
            s.no_half_edge_overhead = nhe as f64 / payload as f64 - 1.0;
        }
        if splits > 0 {
            s.boundary_fraction = bnd as f64 / splits as f64;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::simplify::decimate_to_pm;

    #[test]
    fn corpus_summary_pools_splits() {
        let a = CompressionReport::new(4, 1, 0);
        let b = CompressionReport::new(1, 0, 2);
        let s = CorpusSummary::from_reports([&a, &b]);
        assert_eq!(s.meshes, 2);
        assert_eq!(s.mean_ratio, (a.ratio + b.ratio) / 2.0);
        assert_eq!(s.boundary_fraction, 2.0 / 3.0);
        assert_eq!(
            s.no_half_edge_overhead,
            (48.0 + 9.0 + 29.0) / (48.0 + 29.0) - 1.0
        );
        assert_eq!(CorpusSummary::from_reports([]), CorpusSummary::default());
    }

    #[test]
    fn special_ids() {
        let v = Vocabulary::new(128).unwrap();
        assert_eq!([v.bos(), v.sep(), v.eos(), v.nil()], [128, 129, 130, 131]);
        assert_eq!(v.size(), 132);
        assert_eq!(v.classify(127), Some(Token::Coord(127)));
        assert_eq!(v.classify(131), Some(Token::Nil));
        assert_eq!(v.classify(132), None);
        assert!(Vocabulary::new(MAX_BINS).is_ok());
        assert!(Vocabulary::new(MAX_BINS + 1).is_err());
    }

    #[test]
    fn pyramid_split_group() {
        let (pyr, ids) = shapes::pyramid();
        let c = |v| pyr.coord(v).unwrap();
        let rec = VSplitRecord {
            s: c(ids.base[0]),
            l: Some(c(ids.base[2])),
            r: Some(c(ids.apex)),
            t: c(ids.base[1]),
        };
        let v = Vocabulary::new(128).unwrap();
        assert_eq!(
            encode_vsplit(&rec, &v).unwrap(),
            vec![0, 0, 0, 100, 100, 0, 50, 50, 80, 100, 0, 0]
        );
        let rec = VSplitRecord { r: None, ..rec };
        assert_eq!(
            encode_vsplit(&rec, &v).unwrap(),
            vec![0, 0, 0, 100, 100, 0, 131, 100, 0, 0]
        );
        let rec = VSplitRecord { l: None, ..rec };
        assert_eq!(encode_vsplit(&rec, &v), Err(CodecError::BothNil));
    }

    #[test]
    fn coordinates_must_fit_the_grid() {
        let v = Vocabulary::new(64).unwrap();
        let err = encode_m0(&shapes::tetrahedron(), &v).unwrap_err();
        assert!(matches!(
            err,
            CodecError::CoordinateOutOfRange { n_bins: 64, .. }
        ));
    }

    #[test]
    fn report_closed_form() {
        let r = CompressionReport::new(4, 10, 3);
        assert_eq!(r.faces, 4 + 20 + 3);
        assert_eq!(r.payload_tokens, 36 + 120 + 30);
        assert_eq!(r.tokens, r.payload_tokens + 3);
        assert!((r.ratio - 186.0 / 243.0).abs() < 1e-15);
        assert_eq!(r.no_half_edge_payload, 186 + 39);
    }

    #[test]
    fn no_half_edge_stream_is_three_longer_per_split() {
        let (mesh, grid) =
            crate::grid::normalize_quantize(&shapes::torus(12, 6, 1.0, 0.3), 128).unwrap();
        let pm = decimate_to_pm(&mesh, grid).unwrap();
        let plain = encode_pm(&pm).unwrap();
        let nhe = encode_pm_no_halfedge(&pm).unwrap();
        assert_eq!(nhe.len(), plain.len() + 3 * pm.len());
    }
}
