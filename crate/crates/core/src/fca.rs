//! Fuzzy cellular automaton on a linear, non-periodic array.
//!
//! Each cell's next state is the mean of the cells it depends on (a subset of
//! its left neighbour, itself and its right neighbour), complemented to
//! `1 - x` where the rule's complement bit is set. Evolution runs until a
//! fixed point or a period-2 cycle is reached, or the step budget runs out.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Schedule};

#[derive(Debug, Error, PartialEq)]
pub enum FcaError {
    #[error("dimension mismatch: rule has {rule} cells, configuration has {config}")]
    DimensionMismatch { rule: usize, config: usize },
    #[error("cell {index} value {value} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("cell {0} has no dependencies")]
    EmptyRow(usize),
    #[error("cell {cell} cannot depend on cell {dep}")]
    OutsideNeighbourhood { cell: usize, dep: usize },
    #[error("rule must have at least one cell")]
    Empty,
    #[error("dependency matrix has {deps} rows, complement vector has {bits}")]
    LengthMismatch { deps: usize, bits: usize },
    #[error("invalid evolution parameters: {0}")]
    BadParams(&'static str),
    #[error("grid of {levels}^{len} configurations exceeds the enumeration limit of {limit}")]
    GridTooLarge {
        levels: usize,
        len: usize,
        limit: usize,
    },
}

/// Cell states, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyConfiguration(Vec<f64>);

impl FuzzyConfiguration {
    pub fn new(cells: Vec<f64>) -> Result<Self, FcaError> {
        if let Some((index, &value)) = cells
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(FcaError::OutOfRange { index, value });
        }
        Ok(Self(cells))
    }

    pub(crate) fn new_unchecked(cells: Vec<f64>) -> Self {
        Self(cells)
    }

    pub fn cells(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &FuzzyConfiguration) -> FuzzyConfiguration {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }
}

pub const DEP_LEFT: u8 = 0b001;
pub const DEP_SELF: u8 = 0b010;
pub const DEP_RIGHT: u8 = 0b100;

/// Tridiagonal dependency structure `T`: for each cell, a non-empty bit mask
/// over {left, self, right}. Boundary cells have no outer neighbour.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DependencyMatrix {
    rows: Vec<u8>,
}

impl DependencyMatrix {
    pub fn new(rows: Vec<u8>) -> Result<Self, FcaError> {
        let len = rows.len();
        if len == 0 {
            return Err(FcaError::Empty);
        }
        for (i, &m) in rows.iter().enumerate() {
            if m == 0 {
                return Err(FcaError::EmptyRow(i));
            }
            let allowed = Self::allowed_mask(i, len);
            if m & !allowed != 0 {
                let dep = if m & DEP_LEFT != 0 && allowed & DEP_LEFT == 0 {
                    i.wrapping_sub(1)
                } else if m & DEP_RIGHT != 0 && allowed & DEP_RIGHT == 0 {
                    i + 1
                } else {
                    usize::MAX
                };
                return Err(FcaError::OutsideNeighbourhood { cell: i, dep });
            }
        }
        Ok(Self { rows })
    }

    /// Build from explicit 0-based dependency index lists.
    pub fn from_index_lists(lists: &[Vec<usize>]) -> Result<Self, FcaError> {
        let mut rows = Vec::with_capacity(lists.len());
        for (i, deps) in lists.iter().enumerate() {
            let mut m = 0u8;
            for &d in deps {
                m |= match d {
                    _ if d + 1 == i => DEP_LEFT,
                    _ if d == i => DEP_SELF,
                    _ if d == i + 1 => DEP_RIGHT,
                    _ => return Err(FcaError::OutsideNeighbourhood { cell: i, dep: d }),
                };
            }
            rows.push(m);
        }
        Self::new(rows)
    }

    pub fn identity(len: usize) -> Self {
        Self {
            rows: vec![DEP_SELF; len],
        }
    }

    /// Neighbourhood bits available to cell `i` in an array of `len` cells.
    pub fn allowed_mask(i: usize, len: usize) -> u8 {
        let mut m = DEP_SELF;
        if i > 0 {
            m |= DEP_LEFT;
        }
        if i + 1 < len {
            m |= DEP_RIGHT;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[u8] {
        &self.rows
    }

    /// 0-based indices cell `i` depends on, ascending.
    pub fn dependencies(&self, i: usize) -> Vec<usize> {
        let m = self.rows[i];
        let mut v = Vec::with_capacity(3);
        if m & DEP_LEFT != 0 {
            v.push(i - 1);
        }
        if m & DEP_SELF != 0 {
            v.push(i);
        }
        if m & DEP_RIGHT != 0 {
            v.push(i + 1);
        }
        v
    }

    pub fn index_lists(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|i| self.dependencies(i)).collect()
    }
}

/// Complement vector `F`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplementVector(Vec<bool>);

impl ComplementVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A complete CA rule: the pair (T, F).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CaRule {
    deps: DependencyMatrix,
    complement: ComplementVector,
}

impl CaRule {
    pub fn new(deps: DependencyMatrix, complement: ComplementVector) -> Result<Self, FcaError> {
        if deps.len() != complement.len() {
            return Err(FcaError::LengthMismatch {
                deps: deps.len(),
                bits: complement.len(),
            });
        }
        Ok(Self { deps, complement })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            deps: DependencyMatrix::identity(len),
            complement: ComplementVector::zeros(len),
        }
    }

    pub fn deps(&self) -> &DependencyMatrix {
        &self.deps
    }

    pub fn complement(&self) -> &ComplementVector {
        &self.complement
    }

    pub fn len(&self) -> usize {
        self.deps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deps.is_empty()
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::new(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub max_steps: usize,
    pub epsilon: f64,
    pub quant_levels: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            max_steps: 256,
            epsilon: 1e-9,
            quant_levels: 8,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<(), FcaError> {
        if self.max_steps < 1 {
            return Err(FcaError::BadParams("max_steps must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(FcaError::BadParams("epsilon must lie in (0, 1)"));
        }
        if !(2..=256).contains(&self.quant_levels) {
            return Err(FcaError::BadParams("quant_levels must lie in [2, 256]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttractorKind {
    FixedPoint,
    Period2Cycle,
    Truncated,
}

/// Basin identity: the configuration quantised to `K` equispaced levels.
///
/// Equality, ordering and hashing look only at the level indices, so two
/// configurations that quantise identically share one id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttractorId {
    levels: Box<[u8]>,
}

impl AttractorId {
    pub fn from_levels(levels: impl Into<Box<[u8]>>) -> Self {
        Self {
            levels: levels.into(),
        }
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    /// Level indices joined by `|`.
    pub fn key(&self) -> String {
        self.to_string()
    }

    pub fn from_key(key: &str) -> Option<Self> {
        if key.is_empty() {
            return Some(Self::from_levels(Vec::new()));
        }
        key.split('|')
            .map(|t| t.parse::<u8>().ok())
            .collect::<Option<Vec<u8>>>()
            .map(Self::from_levels)
    }
}

impl fmt::Display for AttractorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[inline]
fn quantize_cell(x: f64, k: usize) -> u8 {
    let top = (k - 1) as f64;
    (x * top + 0.5).floor().clamp(0.0, top) as u8
}

fn quantize_into(cells: &[f64], k: usize, out: &mut [u8]) {
    for (o, &x) in out.iter_mut().zip(cells) {
        *o = quantize_cell(x, k);
    }
}

/// Round each cell to the nearest of `k` levels `j / (k - 1)`; ties round up.
pub fn attractor_id(s: &FuzzyConfiguration, k: usize) -> AttractorId {
    let mut levels = vec![0u8; s.len()];
    quantize_into(s.cells(), k.clamp(2, 256), &mut levels);
    AttractorId::from_levels(levels)
}

/// Rule compiled into per-cell masks for the hot loop:
/// `next[i] = offset[i] + sign[i] * (wl[i]*s[i-1] + wc[i]*s[i] + wr[i]*s[i+1]) / count[i]`
/// with 0/1 masks, so the mean is a correctly rounded quotient.
#[derive(Debug, Clone)]
pub struct Kernel {
    wl: Vec<f64>,
    wc: Vec<f64>,
    wr: Vec<f64>,
    count: Vec<f64>,
    offset: Vec<f64>,
    sign: Vec<f64>,
}

impl Kernel {
    fn new(rule: &CaRule) -> Self {
        let n = rule.len();
        let mut k = Kernel {
            wl: vec![0.0; n],
            wc: vec![0.0; n],
            wr: vec![0.0; n],
            count: vec![1.0; n],
            offset: vec![0.0; n],
            sign: vec![1.0; n],
        };
        for (i, &m) in rule.deps.rows().iter().enumerate() {
            k.count[i] = m.count_ones() as f64;
            if m & DEP_LEFT != 0 {
                k.wl[i] = 1.0;
            }
            if m & DEP_SELF != 0 {
                k.wc[i] = 1.0;
            }
            if m & DEP_RIGHT != 0 {
                k.wr[i] = 1.0;
            }
            if rule.complement.bits()[i] {
                k.offset[i] = 1.0;
                k.sign[i] = -1.0;
            }
        }
        k
    }

    pub fn len(&self) -> usize {
        self.wc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wc.is_empty()
    }

    /// `src` and `dst` are padded with one zero cell at each end.
    #[inline]
    fn apply_padded(&self, src: &[f64], dst: &mut [f64]) {
        let n = self.len();
        let (l, c, r) = (&src[..n], &src[1..=n], &src[2..n + 2]);
        let out = &mut dst[1..=n];
        for i in 0..n {
            let m = (self.wl[i] * l[i] + self.wc[i] * c[i] + self.wr[i] * r[i]) / self.count[i];
            out[i] = self.offset[i] + self.sign[i] * m;
        }
    }
}

#[inline]
fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Reusable buffers for repeated evolutions of one rule length.
#[derive(Debug, Clone)]
pub struct Evolver {
    bufs: [Vec<f64>; 3],
    quant: Vec<u8>,
}

/// Where an evolution stopped, relative to the evolver's buffers.
#[derive(Debug, Clone, Copy)]
struct Stop {
    kind: AttractorKind,
    steps: usize,
    state: usize,
    partner: Option<usize>,
}

impl Evolver {
    pub fn new(len: usize) -> Self {
        Self {
            bufs: [vec![0.0; len + 2], vec![0.0; len + 2], vec![0.0; len + 2]],
            quant: vec![0; len],
        }
    }

    fn run(&mut self, kernel: &Kernel, s0: &[f64], params: &EvolutionParams) -> Stop {
        let n = kernel.len();
        if self.bufs[0].len() != n + 2 {
            *self = Evolver::new(n);
        }
        self.bufs[0][1..=n].copy_from_slice(s0);
        let (mut prev, mut cur, mut next) = (usize::MAX, 0usize, 1usize);
        let mut t = 0usize;
        loop {
            if t == params.max_steps {
                return Stop {
                    kind: AttractorKind::Truncated,
                    steps: t,
                    state: cur,
                    partner: None,
                };
            }
            {
                let (src, dst) = pair_mut(&mut self.bufs, cur, next);
                kernel.apply_padded(src, dst);
            }
            let nx = &self.bufs[next][1..=n];
            if max_abs_diff(nx, &self.bufs[cur][1..=n]) <= params.epsilon {
                return Stop {
                    kind: AttractorKind::FixedPoint,
                    steps: t,
                    state: cur,
                    partner: None,
                };
            }
            if t >= 1 && max_abs_diff(nx, &self.bufs[prev][1..=n]) <= params.epsilon {
                return Stop {
                    kind: AttractorKind::Period2Cycle,
                    steps: t - 1,
                    state: prev,
                    partner: Some(cur),
                };
            }
            let spare = if t == 0 { 2 } else { prev };
            prev = cur;
            cur = next;
            next = spare;
            t += 1;
        }
    }

    fn write_levels(&mut self, stop: Stop, n: usize, k: usize, out: &mut [u8]) {
        quantize_into(&self.bufs[stop.state][1..=n], k, out);
        if let Some(p) = stop.partner {
            quantize_into(&self.bufs[p][1..=n], k, &mut self.quant[..n]);
            if self.quant[..n].cmp(&out[..n]) == Ordering::Less {
                out[..n].copy_from_slice(&self.quant[..n]);
            }
        }
    }

    /// Evolve `s0` and write the attractor's level indices into `out`.
    pub fn attractor_levels(
        &mut self,
        kernel: &Kernel,
        s0: &[f64],
        params: &EvolutionParams,
        out: &mut [u8],
    ) -> (AttractorKind, usize) {
        let stop = self.run(kernel, s0, params);
        self.write_levels(stop, kernel.len(), params.quant_levels, out);
        (stop.kind, stop.steps)
    }

    pub fn evolve(&mut self, kernel: &Kernel, s0: &[f64], params: &EvolutionParams) -> Trajectory {
        let n = kernel.len();
        let stop = self.run(kernel, s0, params);
        let mut levels = vec![0u8; n];
        self.write_levels(stop, n, params.quant_levels, &mut levels);
        Trajectory {
            final_state: FuzzyConfiguration(self.bufs[stop.state][1..=n].to_vec()),
            id: AttractorId::from_levels(levels),
            kind: stop.kind,
            steps: stop.steps,
        }
    }
}

fn pair_mut(bufs: &mut [Vec<f64>; 3], a: usize, b: usize) -> (&[f64], &mut [f64]) {
    debug_assert_ne!(a, b);
    let [x, y, z] = bufs;
    match (a, b) {
        (0, 1) => (x, y),
        (0, _) => (x, z),
        (1, 0) => (y, x),
        (1, _) => (y, z),
        (_, 0) => (z, x),
        _ => (z, y),
    }
}

/// Instances evolved together by [`BatchEvolver`].
pub const LANES: usize = 8;

/// Lockstep evolution of up to [`LANES`] configurations under one rule.
///
/// State is stored cell-major with one lane per instance, so each cell
/// update is a short fixed-width loop. Every lane performs exactly the
/// arithmetic of [`Evolver`] and stops under the same conditions; a stopped
/// lane keeps being stepped but its result is already recorded.
#[derive(Debug, Clone)]
pub struct BatchEvolver {
    bufs: [Vec<Lanes>; 3],
    lane: Vec<f64>,
    quant: Vec<u8>,
}

type Lanes = [f64; LANES];

/// One step for every lane; returns per-lane max |next - cur| and |next - prev|.
#[inline]
fn batch_step(kernel: &Kernel, src: &[Lanes], old: &[Lanes], dst: &mut [Lanes]) -> (Lanes, Lanes) {
    let n = kernel.len();
    let (wl, wc, wr) = (&kernel.wl[..n], &kernel.wc[..n], &kernel.wr[..n]);
    let (count, offset, sign) = (&kernel.count[..n], &kernel.offset[..n], &kernel.sign[..n]);
    let (src, old, dst) = (&src[..n + 2], &old[1..=n], &mut dst[1..=n]);
    let mut d_cur = [0.0; LANES];
    let mut d_prev = [0.0; LANES];
    for i in 0..n {
        let (l, c, r, p) = (&src[i], &src[i + 1], &src[i + 2], &old[i]);
        let mut o = [0.0; LANES];
        if count[i] == 3.0 {
            for b in 0..LANES {
                let m = (wl[i] * l[b] + wc[i] * c[b] + wr[i] * r[b]) / 3.0;
                o[b] = offset[i] + sign[i] * m;
            }
        } else {
            // x / 1 and x / 2 are exact as products
            let inv = 1.0 / count[i];
            for b in 0..LANES {
                let m = (wl[i] * l[b] + wc[i] * c[b] + wr[i] * r[b]) * inv;
                o[b] = offset[i] + sign[i] * m;
            }
        }
        for b in 0..LANES {
            let e1 = (o[b] - c[b]).abs();
            let e2 = (o[b] - p[b]).abs();
            d_cur[b] = if d_cur[b] < e1 { e1 } else { d_cur[b] };
            d_prev[b] = if d_prev[b] < e2 { e2 } else { d_prev[b] };
        }
        dst[i] = o;
    }
    (d_cur, d_prev)
}

impl BatchEvolver {
    pub fn new(len: usize) -> Self {
        let buf = vec![[0.0; LANES]; len + 2];
        Self {
            bufs: [buf.clone(), buf.clone(), buf],
            lane: vec![0.0; len],
            quant: vec![0; len],
        }
    }

    fn write_lane_levels(&mut self, buf: usize, lane: usize, k: usize, out: &mut [u8]) {
        for (i, x) in self.lane.iter_mut().enumerate() {
            *x = self.bufs[buf][i + 1][lane];
        }
        quantize_into(&self.lane, k, out);
    }

    /// Evolve `inputs` (at most [`LANES`], all of the rule's length) and write
    /// each one's attractor levels into consecutive `len`-sized chunks of `out`.
    pub fn attractor_levels(
        &mut self,
        kernel: &Kernel,
        inputs: &[&[f64]],
        params: &EvolutionParams,
        out: &mut [u8],
        kinds: &mut [AttractorKind],
    ) {
        let n = kernel.len();
        assert!(!inputs.is_empty() && inputs.len() <= LANES);
        if self.lane.len() != n {
            *self = BatchEvolver::new(n);
        }
        for buf in self.bufs.iter_mut() {
            buf.fill([0.0; LANES]);
        }
        for lane in 0..LANES {
            let src = inputs[lane.min(inputs.len() - 1)];
            for (row, &x) in self.bufs[0][1..=n].iter_mut().zip(src) {
                row[lane] = x;
            }
        }
        let mut active = [false; LANES];
        active[..inputs.len()].fill(true);
        let mut remaining = inputs.len();
        let (mut prev, mut cur) = (2usize, 0usize);
        let k = params.quant_levels;
        for t in 0..=params.max_steps {
            if t == params.max_steps {
                for lane in 0..inputs.len() {
                    if active[lane] {
                        self.write_lane_levels(cur, lane, k, &mut out[lane * n..(lane + 1) * n]);
                        kinds[lane] = AttractorKind::Truncated;
                    }
                }
                return;
            }
            let next = 3 - prev - cur;
            let (d_cur, d_prev) = {
                let [b0, b1, b2] = &mut self.bufs;
                match (cur, prev) {
                    (0, 2) => batch_step(kernel, b0, b2, b1),
                    (1, 0) => batch_step(kernel, b1, b0, b2),
                    _ => batch_step(kernel, b2, b1, b0),
                }
            };
            for lane in 0..inputs.len() {
                if !active[lane] {
                    continue;
                }
                let chunk = lane * n..(lane + 1) * n;
                if d_cur[lane] <= params.epsilon {
                    self.write_lane_levels(cur, lane, k, &mut out[chunk]);
                    kinds[lane] = AttractorKind::FixedPoint;
                } else if t >= 1 && d_prev[lane] <= params.epsilon {
                    self.write_lane_levels(prev, lane, k, &mut out[chunk.clone()]);
                    let mut q = std::mem::take(&mut self.quant);
                    self.write_lane_levels(cur, lane, k, &mut q);
                    if q[..] < out[chunk.clone()] {
                        out[chunk].copy_from_slice(&q);
                    }
                    self.quant = q;
                    kinds[lane] = AttractorKind::Period2Cycle;
                } else {
                    continue;
                }
                active[lane] = false;
                remaining -= 1;
            }
            if remaining == 0 {
                return;
            }
            prev = cur;
            cur = next;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: FuzzyConfiguration,
    pub id: AttractorId,
    pub kind: AttractorKind,
    pub steps: usize,
}

fn check_dims(rule: &CaRule, s: &FuzzyConfiguration) -> Result<(), FcaError> {
    if rule.len() != s.len() {
        return Err(FcaError::DimensionMismatch {
            rule: rule.len(),
            config: s.len(),
        });
    }
    Ok(())
}

/// One synchronous update of every cell.
pub fn step(rule: &CaRule, s: &FuzzyConfiguration) -> Result<FuzzyConfiguration, FcaError> {
    check_dims(rule, s)?;
    let n = s.len();
    let mut src = vec![0.0; n + 2];
    src[1..=n].copy_from_slice(s.cells());
    let mut dst = vec![0.0; n + 2];
    rule.kernel().apply_padded(&src, &mut dst);
    dst.truncate(n + 1);
    dst.remove(0);
    Ok(FuzzyConfiguration(dst))
}

/// Iterate [`step`] until a fixed point, a period-2 cycle or `max_steps`.
///
/// For a cycle the id is the lexicographically smaller quantised member.
/// `steps` counts updates applied before the attractor was first reached.
pub fn evolve(
    rule: &CaRule,
    s0: &FuzzyConfiguration,
    params: &EvolutionParams,
) -> Result<Trajectory, FcaError> {
    check_dims(rule, s0)?;
    params.validate()?;
    Ok(Evolver::new(rule.len()).evolve(&rule.kernel(), s0.cells(), params))
}

pub const ENUMERATION_LIMIT: usize = 65_536;

/// Every grid configuration grouped by the attractor it reaches.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinPartition {
    pub len: usize,
    pub levels: usize,
    /// grid indices per basin, ascending; cell 0 is the most significant digit
    pub basins: BTreeMap<AttractorId, Vec<u32>>,
}

impl BasinPartition {
    pub fn grid_size(&self) -> usize {
        self.levels.pow(self.len as u32)
    }

    pub fn configuration(&self, index: u32) -> FuzzyConfiguration {
        grid_configuration(index as usize, self.len, self.levels)
    }

    pub fn basin_sizes(&self) -> Vec<usize> {
        self.basins.values().map(Vec::len).collect()
    }
}

pub fn grid_configuration(mut index: usize, len: usize, levels: usize) -> FuzzyConfiguration {
    let mut cells = vec![0.0; len];
    let top = (levels - 1) as f64;
    for c in cells.iter_mut().rev() {
        *c = (index % levels) as f64 / top;
        index /= levels;
    }
    FuzzyConfiguration(cells)
}

/// Exhaustively evolve all `levels^L` grid configurations.
pub fn enumerate_basins(
    rule: &CaRule,
    levels: usize,
    params: &EvolutionParams,
    schedule: Schedule,
) -> Result<BasinPartition, FcaError> {
    params.validate()?;
    let len = rule.len();
    if levels < 2 {
        return Err(FcaError::BadParams("grid needs at least two levels"));
    }
    let total = (levels as u128)
        .checked_pow(len as u32)
        .unwrap_or(u128::MAX);
    if total > ENUMERATION_LIMIT as u128 {
        return Err(FcaError::GridTooLarge {
            levels,
            len,
            limit: ENUMERATION_LIMIT,
        });
    }
    let kernel = rule.kernel();
    let ids = par::map_range_with(
        schedule,
        total as usize,
        || (Evolver::new(len), vec![0u8; len]),
        |(ev, out), idx| {
            let s = grid_configuration(idx, len, levels);
            ev.attractor_levels(&kernel, s.cells(), params, out);
            out.clone()
        },
    );
    let mut basins: BTreeMap<AttractorId, Vec<u32>> = BTreeMap::new();
    for (idx, levels) in ids.into_iter().enumerate() {
        basins
            .entry(AttractorId::from_levels(levels))
            .or_default()
            .push(idx as u32);
    }
    Ok(BasinPartition {
        len,
        levels,
        basins,
    })
}
