//! Incremental, validity-checking token decoder.
//!
//! [`DecoderState`] consumes one token at a time and rejects any token after
//! which the stream could no longer decode to a manifold mesh. The same rules
//! yield [`DecoderState::allowed_tokens`], the mask used for guided sampling.
//!
//! Base mesh faces are checked only for violations no later face can repair:
//! a repeated directed half-edge, a repeated face, or a vertex fan that is
//! closed while the vertex has other faces. Fans that are merely split are
//! tolerated until `SEP`, which requires the base mesh to be fully manifold.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::codec::{CodecError, Vocabulary};
use crate::grid::GridSpec;
use crate::mesh::{Coord, HalfEdgeMesh, MeshError, VertexId};
use crate::progressive::{vsplit_apply, ProgressiveMesh, SplitError, VSplitRecord};

/// Where the decoder is in the stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    ExpectBos,
    /// Inside the base mesh; the value is the number of tokens of the current
    /// face already read (0 at a face boundary, where `SEP` may follow).
    M0Face(u8),
    /// After `SEP`; the value is the number of tokens of the current split
    /// group already read (0 at a group boundary, where `EOS` may follow).
    VSplit(u8),
    Done,
}

/// Why a token was refused.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    OutOfVocabulary,
    ExpectedBos,
    AfterEos,
    UnexpectedSpecial,
    EosBeforeSep,
    EmptyBase,
    BaseNotManifold,
    RepeatedFaceVertex,
    HalfEdgeTaken,
    ClosedFan,
    FanWouldClose,
    DuplicateFace,
    UnknownVertex,
    NotANeighbor,
    NilAtInterior,
    SameSides,
    Occupied,
    GridFull,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::OutOfVocabulary => "token id outside the vocabulary",
            Rejection::ExpectedBos => "stream must start with BOS",
            Rejection::AfterEos => "token after EOS",
            Rejection::UnexpectedSpecial => "special token where a coordinate is required",
            Rejection::EosBeforeSep => "EOS before the base mesh was closed by SEP",
            Rejection::EmptyBase => "SEP before any base face",
            Rejection::BaseNotManifold => "SEP while the base mesh is not manifold",
            Rejection::RepeatedFaceVertex => "face repeats a vertex",
            Rejection::HalfEdgeTaken => "face reuses an existing directed half-edge",
            Rejection::ClosedFan => "vertex fan is already closed",
            Rejection::FanWouldClose => "face would close a fan at a vertex with other faces",
            Rejection::DuplicateFace => "face duplicates an existing face",
            Rejection::UnknownVertex => "no vertex of the current mesh has this coordinate prefix",
            Rejection::NotANeighbor => "no neighbor of v_s has this coordinate prefix",
            Rejection::NilAtInterior => "NIL side at an interior vertex",
            Rejection::SameSides => "v_r equals v_l",
            Rejection::Occupied => "every coordinate with this prefix is taken",
            Rejection::GridFull => "no free grid cell left for a new vertex",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error(transparent)]
    Vocabulary(#[from] CodecError),
    #[error("token {token} at position {position} rejected: {reason}")]
    Rejected {
        position: usize,
        token: u16,
        reason: Rejection,
    },
    #[error("stream ended in phase {0:?}")]
    Incomplete(Phase),
    #[error("no faces decoded yet")]
    EmptyMesh,
    #[error("internal mesh update failed: {0}")]
    Mesh(#[from] MeshError),
    #[error("internal split failed: {0}")]
    Split(#[from] SplitError),
}

/// What a successful [`DecoderState::step`] completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    Started,
    /// A token inside a face or split group.
    Partial,
    FaceAdded,
    BaseComplete,
    SplitApplied(VertexId),
    Finished,
}

/// Refinement level of the mesh returned by [`DecoderState::current_mesh`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Base mesh still being read; it may not be manifold yet.
    PartialBase { faces: usize },
    /// `M_k` after `k` splits.
    Refined(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct MeshSnapshot<'a> {
    pub mesh: &'a HalfEdgeMesh,
    pub level: Level,
    /// Tokens read since the last complete face or split group.
    pub pending_tokens: usize,
}

/// Bitset over token ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenMask {
    bits: Vec<u64>,
    len: usize,
}

impl TokenMask {
    pub fn empty(len: usize) -> Self {
        Self {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn allow(&mut self, token: u16) {
        let t = token as usize;
        debug_assert!(t < self.len);
        self.bits[t / 64] |= 1 << (t % 64);
    }

    pub fn forbid(&mut self, token: u16) {
        let t = token as usize;
        if t < self.len {
            self.bits[t / 64] &= !(1 << (t % 64));
        }
    }

    pub fn is_allowed(&self, token: u16) -> bool {
        let t = token as usize;
        t < self.len && self.bits[t / 64] & (1 << (t % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Vocabulary size this mask covers.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = u16> + '_ {
        (0..self.len as u16).filter(|&t| self.is_allowed(t))
    }

    /// The `i`-th allowed token in ascending order.
    pub fn nth(&self, i: usize) -> Option<u16> {
        self.iter().nth(i)
    }
}

/// Partially read split group.
#[derive(Clone, Copy, Debug, Default)]
struct Group {
    /// Completed fields in order `s, l, r, t`; inner `None` is `NIL`.
    fields: [Option<Option<Coord>>; 4],
    done: usize,
    prefix: [u16; 3],
    prefix_len: usize,
}

impl Group {
    fn parse(buf: &[u16], nil: u16) -> Self {
        let mut g = Group::default();
        for &tok in buf {
            g.push(tok, nil);
        }
        g
    }

    fn push(&mut self, tok: u16, nil: u16) {
        if tok == nil {
            self.fields[self.done] = Some(None);
            self.done += 1;
            return;
        }
        self.prefix[self.prefix_len] = tok;
        self.prefix_len += 1;
        if self.prefix_len == 3 {
            self.fields[self.done] = Some(Some(Coord::from(self.prefix)));
            self.done += 1;
            self.prefix_len = 0;
        }
    }

    fn coord(&self, i: usize) -> Option<Coord> {
        self.fields[i].flatten()
    }
}

/// Incremental decoder; see the module docs.
#[derive(Clone, Debug)]
pub struct DecoderState {
    vocab: Vocabulary,
    phase: Phase,
    mesh: HalfEdgeMesh,
    buffer: Vec<u16>,
    base: Option<HalfEdgeMesh>,
    records: Vec<VSplitRecord>,
    consumed: usize,
}

/// Whether `prefix` (1 to 3 components) starts `c`.
fn matches_prefix(c: Coord, prefix: &[u16]) -> bool {
    c.to_array()[..prefix.len()] == *prefix
}

impl DecoderState {
    pub fn new(n_bins: u32) -> Result<Self, DecodeError> {
        Ok(Self::with_vocabulary(Vocabulary::new(n_bins)?))
    }

    pub fn with_vocabulary(vocab: Vocabulary) -> Self {
        Self {
            vocab,
            phase: Phase::ExpectBos,
            mesh: HalfEdgeMesh::new(),
            buffer: Vec::new(),
            base: None,
            records: Vec::new(),
            consumed: 0,
        }
    }

    pub fn vocabulary(&self) -> Vocabulary {
        self.vocab
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Tokens accepted so far.
    pub fn position(&self) -> usize {
        self.consumed
    }

    pub fn records(&self) -> &[VSplitRecord] {
        &self.records
    }

    pub fn base(&self) -> Option<&HalfEdgeMesh> {
        self.base.as_ref()
    }

    /// Last complete mesh: the partial base during `M_0`, else `M_k`.
    pub fn current_mesh(&self) -> Result<MeshSnapshot<'_>, DecodeError> {
        if self.mesh.face_count() == 0 {
            return Err(DecodeError::EmptyMesh);
        }
        let level = match self.base {
            None => Level::PartialBase {
                faces: self.mesh.face_count(),
            },
            Some(_) => Level::Refined(self.records.len()),
        };
        Ok(MeshSnapshot {
            mesh: &self.mesh,
            level,
            pending_tokens: self.buffer.len(),
        })
    }

    /// Consumes the decoder once `EOS` has been read.
    pub fn into_progressive(self, grid: GridSpec) -> Result<ProgressiveMesh, DecodeError> {
        if self.phase != Phase::Done {
            return Err(DecodeError::Incomplete(self.phase));
        }
        Ok(ProgressiveMesh {
            base: self.base.expect("base is set once SEP is read"),
            records: self.records,
            grid,
        })
    }

    pub fn step(&mut self, token: u16) -> Result<StepEvent, DecodeError> {
        self.check(token).map_err(|reason| DecodeError::Rejected {
            position: self.consumed,
            token,
            reason,
        })?;
        self.consumed += 1;
        let v = self.vocab;
        let event = match self.phase {
            Phase::ExpectBos => {
                self.phase = Phase::M0Face(0);
                StepEvent::Started
            }
            Phase::M0Face(0) if token == v.sep() => {
                self.base = Some(self.mesh.clone());
                self.phase = Phase::VSplit(0);
                StepEvent::BaseComplete
            }
            Phase::M0Face(_) => {
                self.buffer.push(token);
                if self.buffer.len() < 9 {
                    self.phase = Phase::M0Face(self.buffer.len() as u8);
                    StepEvent::Partial
                } else {
                    let mut tri = [VertexId(0); 3];
                    for (i, chunk) in self.buffer.chunks_exact(3).enumerate() {
                        let c = Coord::new(chunk[0], chunk[1], chunk[2]);
                        tri[i] = match self.mesh.vertex_at(c) {
                            Some(id) => id,
                            None => self.mesh.add_vertex(c)?,
                        };
                    }
                    self.mesh.add_face(tri)?;
                    self.buffer.clear();
                    self.phase = Phase::M0Face(0);
                    StepEvent::FaceAdded
                }
            }
            Phase::VSplit(0) if token == v.eos() => {
                self.phase = Phase::Done;
                StepEvent::Finished
            }
            Phase::VSplit(_) => {
                self.buffer.push(token);
                let g = Group::parse(&self.buffer, v.nil());
                if g.done < 4 {
                    self.phase = Phase::VSplit(self.buffer.len() as u8);
                    StepEvent::Partial
                } else {
                    let rec = VSplitRecord {
                        s: g.coord(0).expect("v_s is a coordinate"),
                        l: g.coord(1),
                        r: g.coord(2),
                        t: g.coord(3).expect("v_t is a coordinate"),
                    };
                    let t = vsplit_apply(&mut self.mesh, &rec)?;
                    self.records.push(rec);
                    self.buffer.clear();
                    self.phase = Phase::VSplit(0);
                    StepEvent::SplitApplied(t)
                }
            }
            Phase::Done => unreachable!("check rejects tokens after EOS"),
        };
        Ok(event)
    }

    /// Whether `token` is legal next, and if not, why.
    pub fn check(&self, token: u16) -> Result<(), Rejection> {
        let v = self.vocab;
        if token as usize >= v.size() {
            return Err(Rejection::OutOfVocabulary);
        }
        let is_coord = (token as u32) < v.n_bins();
        match self.phase {
            Phase::Done => Err(Rejection::AfterEos),
            Phase::ExpectBos if token == v.bos() => Ok(()),
            Phase::ExpectBos => Err(Rejection::ExpectedBos),
            Phase::M0Face(n) => {
                if token == v.eos() {
                    return Err(Rejection::EosBeforeSep);
                }
                if n == 0 && token == v.sep() {
                    return self.sep_check();
                }
                if !is_coord {
                    return Err(Rejection::UnexpectedSpecial);
                }
                self.m0_token_check(token)
            }
            Phase::VSplit(0) if token == v.eos() => Ok(()),
            Phase::VSplit(_) => {
                let g = Group::parse(&self.buffer, v.nil());
                if token == v.nil() {
                    return self.nil_check(&g);
                }
                if !is_coord {
                    return Err(Rejection::UnexpectedSpecial);
                }
                let mut prefix = [0u16; 3];
                prefix[..g.prefix_len].copy_from_slice(&g.prefix[..g.prefix_len]);
                prefix[g.prefix_len] = token;
                let prefix = &prefix[..=g.prefix_len];
                match g.done {
                    0 => {
                        if self.vertex_count_under(prefix) == 0 {
                            return Err(Rejection::UnknownVertex);
                        }
                        if self.free_cells() == 0 {
                            return Err(Rejection::GridFull);
                        }
                        Ok(())
                    }
                    1 | 2 => {
                        let cands = self.side_candidates(&g);
                        if cands.iter().any(|&c| matches_prefix(c, prefix)) {
                            Ok(())
                        } else if g.done == 2
                            && g.coord(1).is_some_and(|l| matches_prefix(l, prefix))
                        {
                            Err(Rejection::SameSides)
                        } else {
                            Err(Rejection::NotANeighbor)
                        }
                    }
                    _ => {
                        if (self.vertex_count_under(prefix) as u64) < self.cells_under(prefix.len())
                        {
                            Ok(())
                        } else {
                            Err(Rejection::Occupied)
                        }
                    }
                }
            }
        }
    }

    /// All tokens [`check`](Self::check) accepts.
    pub fn allowed_tokens(&self) -> TokenMask {
        let v = self.vocab;
        let mut mask = TokenMask::empty(v.size());
        match self.phase {
            Phase::Done => {}
            Phase::ExpectBos => mask.allow(v.bos()),
            Phase::M0Face(_) => {
                for t in 0..v.size() as u16 {
                    if self.check(t).is_ok() {
                        mask.allow(t);
                    }
                }
            }
            Phase::VSplit(n) => {
                if n == 0 {
                    mask.allow(v.eos());
                }
                let g = Group::parse(&self.buffer, v.nil());
                let prefix = &g.prefix[..g.prefix_len];
                match g.done {
                    0 => {
                        if self.free_cells() > 0 {
                            for (c, _) in self.mesh.coords() {
                                if matches_prefix(c, prefix) {
                                    mask.allow(c.to_array()[g.prefix_len]);
                                }
                            }
                        }
                    }
                    1 | 2 => {
                        for c in self.side_candidates(&g) {
                            if matches_prefix(c, prefix) {
                                mask.allow(c.to_array()[g.prefix_len]);
                            }
                        }
                        if self.nil_check(&g).is_ok() {
                            mask.allow(v.nil());
                        }
                    }
                    _ => {
                        for t in 0..v.n_bins() as u16 {
                            if self.check(t).is_ok() {
                                mask.allow(t);
                            }
                        }
                    }
                }
            }
        }
        mask
    }

    fn split_source(&self, g: &Group) -> VertexId {
        let s = g.coord(0).expect("v_s read before the sides");
        self.mesh.vertex_at(s).expect("v_s was checked to exist")
    }

    /// Coordinates legal for the side field being read (prefix not applied).
    fn side_candidates(&self, g: &Group) -> Vec<Coord> {
        let s = self.split_source(g);
        let l = if g.done == 2 { g.coord(1) } else { None };
        self.mesh
            .neighbors(s)
            .expect("live vertex")
            .into_iter()
            .map(|w| self.mesh.coord(w).expect("live vertex"))
            .filter(|&c| Some(c) != l)
            .collect()
    }

    fn nil_check(&self, g: &Group) -> Result<(), Rejection> {
        if g.prefix_len != 0 || !(g.done == 1 || g.done == 2) {
            return Err(Rejection::UnexpectedSpecial);
        }
        if g.done == 2 && g.fields[1] == Some(None) {
            return Err(Rejection::SameSides);
        }
        if !self.mesh.is_boundary_vertex(self.split_source(g)) {
            return Err(Rejection::NilAtInterior);
        }
        Ok(())
    }

    fn sep_check(&self) -> Result<(), Rejection> {
        if self.mesh.face_count() == 0 {
            return Err(Rejection::EmptyBase);
        }
        if !self.mesh.validate().is_valid() {
            return Err(Rejection::BaseNotManifold);
        }
        Ok(())
    }

    fn vertex_count_under(&self, prefix: &[u16]) -> usize {
        match *prefix {
            [x] => self.mesh.coords_with_prefix(x, None).count(),
            [x, y] => self.mesh.coords_with_prefix(x, Some(y)).count(),
            [x, y, z] => self.mesh.vertex_at(Coord::new(x, y, z)).is_some() as usize,
            _ => self.mesh.vertex_count(),
        }
    }

    /// Grid cells sharing a prefix of the given length.
    fn cells_under(&self, prefix_len: usize) -> u64 {
        (self.vocab.n_bins() as u64).pow(3 - prefix_len as u32)
    }

    fn free_cells(&self) -> u64 {
        self.cells_under(0) - self.mesh.vertex_count() as u64
    }

    fn m0_token_check(&self, token: u16) -> Result<(), Rejection> {
        let idx = self.buffer.len() / 3;
        let prev: Vec<Coord> = self.buffer[..3 * idx]
            .chunks_exact(3)
            .map(|c| Coord::new(c[0], c[1], c[2]))
            .collect();
        let mut prefix: Vec<u16> = self.buffer[3 * idx..].to_vec();
        prefix.push(token);
        if prefix.len() == 3 {
            return self.m0_vertex_check(&prev, Coord::new(prefix[0], prefix[1], prefix[2]));
        }
        // Known coordinates under the prefix: mesh vertices plus earlier
        // corners of this face that are not in the mesh yet.
        let mut known: BTreeSet<Coord> = match *prefix {
            [x] => self
                .mesh
                .coords_with_prefix(x, None)
                .map(|(c, _)| c)
                .collect(),
            [x, y] => self
                .mesh
                .coords_with_prefix(x, Some(y))
                .map(|(c, _)| c)
                .collect(),
            _ => unreachable!(),
        };
        known.extend(prev.iter().filter(|&&c| matches_prefix(c, &prefix)));
        // A coordinate new to the mesh can always complete a face.
        if (known.len() as u64) < self.cells_under(prefix.len()) {
            return Ok(());
        }
        let mut first_err = Rejection::Occupied;
        for (i, &c) in known.iter().enumerate() {
            match self.m0_vertex_check(&prev, c) {
                Ok(()) => return Ok(()),
                Err(e) if i == 0 => first_err = e,
                Err(_) => {}
            }
        }
        Err(first_err)
    }

    /// Checks face corner `prev.len()` at `c` given the earlier corners.
    fn m0_vertex_check(&self, prev: &[Coord], c: Coord) -> Result<(), Rejection> {
        if prev.contains(&c) {
            return Err(Rejection::RepeatedFaceVertex);
        }
        let m = &self.mesh;
        let Some(vc) = m.vertex_at(c) else {
            return Ok(());
        };
        if fans(m, vc).iter().any(|&closed| closed) {
            return Err(Rejection::ClosedFan);
        }
        let ids: Vec<Option<VertexId>> = prev.iter().map(|&p| m.vertex_at(p)).collect();
        let taken = |a: Option<VertexId>, b: Option<VertexId>| match (a, b) {
            (Some(a), Some(b)) => m.find_half_edge(a, b).is_some(),
            _ => false,
        };
        match ids[..] {
            [] => Ok(()),
            [a] => {
                if taken(a, Some(vc)) {
                    return Err(Rejection::HalfEdgeTaken);
                }
                Ok(())
            }
            [a, b] => {
                if taken(b, Some(vc)) || taken(Some(vc), a) {
                    return Err(Rejection::HalfEdgeTaken);
                }
                let (Some(a), Some(b)) = (a, b) else {
                    // A corner new to the mesh shares at most one edge with it,
                    // so no fan can close.
                    return Ok(());
                };
                if let (Some(h1), Some(h2)) = (m.find_half_edge(a, vc), m.find_half_edge(vc, b)) {
                    if m.face_of(h1) == m.face_of(h2) {
                        return Err(Rejection::DuplicateFace);
                    }
                }
                let mut trial = m.clone();
                trial
                    .add_face([a, b, vc])
                    .map_err(|_| Rejection::HalfEdgeTaken)?;
                for w in [a, b, vc] {
                    let f = fans(&trial, w);
                    if f.len() > 1 && f.iter().any(|&closed| closed) {
                        return Err(Rejection::FanWouldClose);
                    }
                }
                Ok(())
            }
            _ => unreachable!("a face has three corners"),
        }
    }
}

/// Fans around `v`, each reported as closed (`true`) or open.
pub fn fans(mesh: &HalfEdgeMesh, v: VertexId) -> Vec<bool> {
    let incoming: Vec<_> = mesh.outgoing(v).map(|h| mesh.prev(h)).collect();
    let mut seen: BTreeSet<_> = BTreeSet::new();
    let mut out = Vec::new();
    let walk = |start, seen: &mut BTreeSet<_>| {
        let mut h = start;
        loop {
            seen.insert(h);
            match mesh.twin(mesh.next(h)) {
                Some(g) if g == start => return true,
                Some(g) => h = g,
                None => return false,
            }
        }
    };
    for &h in incoming.iter().filter(|&&h| mesh.twin(h).is_none()) {
        out.push(walk(h, &mut seen));
    }
    for &h in &incoming {
        if !seen.contains(&h) {
            out.push(walk(h, &mut seen));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode_pm;
    use crate::shapes;
    use crate::simplify::decimate_to_pm;

    fn feed(dec: &mut DecoderState, tokens: &[u16]) {
        for &t in tokens {
            dec.step(t).unwrap();
        }
    }

    #[test]
    fn fans_of_bowtie_and_closed_vertex() {
        let tetra = shapes::tetrahedron();
        assert_eq!(fans(&tetra, VertexId(0)), vec![true]);
        let coords = [
            Coord::new(5, 5, 0),
            Coord::new(0, 0, 0),
            Coord::new(0, 9, 0),
            Coord::new(9, 0, 0),
            Coord::new(9, 9, 0),
        ];
        let mut m = HalfEdgeMesh::new();
        let ids: Vec<_> = coords.iter().map(|&c| m.add_vertex(c).unwrap()).collect();
        m.add_face([ids[0], ids[1], ids[2]]).unwrap();
        m.add_face([ids[0], ids[4], ids[3]]).unwrap();
        assert_eq!(fans(&m, ids[0]), vec![false, false]);
    }

    #[test]
    fn bos_then_sep_requires_a_face() {
        let mut dec = DecoderState::new(16).unwrap();
        assert_eq!(dec.check(3), Err(Rejection::ExpectedBos));
        dec.step(16).unwrap();
        assert_eq!(dec.check(17), Err(Rejection::EmptyBase));
        assert_eq!(dec.check(18), Err(Rejection::EosBeforeSep));
        assert_eq!(dec.check(19), Err(Rejection::UnexpectedSpecial));
        assert_eq!(dec.check(20), Err(Rejection::OutOfVocabulary));
    }

    #[test]
    fn single_triangle_then_boundary_split() {
        let mut dec = DecoderState::new(16).unwrap();
        feed(&mut dec, &[16, 0, 0, 0, 9, 0, 0, 0, 9, 0, 17]);
        assert_eq!(dec.phase(), Phase::VSplit(0));
        // v_s = (0,9,0); l = (9,0,0); interior? no, boundary: NIL allowed for r.
        feed(&mut dec, &[0, 9, 0, 9, 0, 0]);
        assert!(dec.allowed_tokens().is_allowed(19));
        dec.step(19).unwrap();
        // v_t cannot reuse an existing vertex.
        feed(&mut dec, &[0, 0]);
        assert_eq!(dec.check(0), Err(Rejection::Occupied));
        assert_eq!(dec.step(9).unwrap(), StepEvent::SplitApplied(VertexId(3)));
        dec.step(18).unwrap();
        let pm = dec.into_progressive(GridSpec::unit(16)).unwrap();
        assert_eq!(pm.records.len(), 1);
        let mesh = pm.reconstruct(1).unwrap();
        assert_eq!(mesh.face_count(), 2);
        assert!(mesh.validate().is_valid());
    }

    #[test]
    fn repeated_half_edge_is_refused_mid_coordinate() {
        let mut dec = DecoderState::new(4).unwrap();
        feed(&mut dec, &[4, 0, 0, 0, 1, 0, 0, 0, 1, 0]);
        // Next face starting at (0,0,0) then (1,0,0) repeats the half-edge.
        feed(&mut dec, &[0, 0, 0, 1, 0]);
        assert_eq!(dec.check(0), Err(Rejection::HalfEdgeTaken));
        assert!(dec.check(1).is_ok());
    }

    #[test]
    fn interior_vertex_has_no_nil() {
        let (mesh, grid) = crate::grid::normalize_quantize(&shapes::icosphere(1), 64).unwrap();
        let pm = decimate_to_pm(&mesh, grid).unwrap();
        let stream = encode_pm(&pm).unwrap();
        let sep = stream.tokens.iter().position(|&t| t == 65).unwrap();
        let mut dec = DecoderState::new(64).unwrap();
        feed(&mut dec, &stream.tokens[..sep + 4]);
        assert_eq!(dec.check(67), Err(Rejection::NilAtInterior));
        assert!(!dec.allowed_tokens().is_allowed(67));
    }

    #[test]
    fn mask_agrees_with_check_along_a_real_stream() {
        let (mesh, grid) =
            crate::grid::normalize_quantize(&shapes::height_patch(3, 3, 0.3, 4), 32).unwrap();
        let pm = decimate_to_pm(&mesh, grid).unwrap();
        let stream = encode_pm(&pm).unwrap();
        let mut dec = DecoderState::new(32).unwrap();
        for &tok in &stream.tokens {
            let mask = dec.allowed_tokens();
            for t in 0..36u16 {
                assert_eq!(
                    mask.is_allowed(t),
                    dec.check(t).is_ok(),
                    "token {t} in {:?}",
                    dec.phase()
                );
            }
            assert!(mask.is_allowed(tok));
            dec.step(tok).unwrap();
        }
        assert!(dec.is_done());
        let out = dec.into_progressive(grid).unwrap();
        assert_eq!(out.records, pm.records);
    }

    #[test]
    fn snapshot_levels() {
        let mut dec = DecoderState::new(16).unwrap();
        assert_eq!(dec.current_mesh().unwrap_err(), DecodeError::EmptyMesh);
        feed(&mut dec, &[16, 0, 0, 0, 9, 0, 0, 0, 9, 0]);
        assert_eq!(
            dec.current_mesh().unwrap().level,
            Level::PartialBase { faces: 1 }
        );
        feed(&mut dec, &[17, 0, 9]);
        let snap = dec.current_mesh().unwrap();
        assert_eq!(snap.level, Level::Refined(0));
        assert_eq!(snap.pending_tokens, 2);
    }

    #[test]
    fn mask_helpers() {
        let mut m = TokenMask::empty(70);
        m.allow(3);
        m.allow(69);
        assert_eq!(m.count(), 2);
        assert_eq!(m.nth(1), Some(69));
        m.forbid(3);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![69]);
        assert!(!m.is_allowed(500));
    }
}
