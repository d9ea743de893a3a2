use serde::{Deserialize, Serialize};

use super::{derive_seed, lhs_block, CounterRng, LdsError, SobolGenerator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamKind {
    Srs,
    Lhs,
    Sobol,
}

impl StreamKind {
    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Srs => "srs",
            StreamKind::Lhs => "lhs",
            StreamKind::Sobol => "sobol",
        }
    }
}

impl std::str::FromStr for StreamKind {
    type Err = LdsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srs" => Ok(StreamKind::Srs),
            "lhs" => Ok(StreamKind::Lhs),
            "sobol" | "qmc" => Ok(StreamKind::Sobol),
            other => Err(LdsError::InvalidOption(format!("unknown stream kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for StreamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that determines a stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub kind: StreamKind,
    pub dim: usize,
    pub seed: u64,
    /// Sobol: points discarded before the first emitted one.
    /// SRS/LHS: points drawn and dropped.
    #[serde(default)]
    pub skip: u64,
    /// Sobol only: XOR each coordinate with a word derived from `seed`.
    #[serde(default)]
    pub digital_shift: bool,
    /// Sobol only: serve consecutive blocks of this many points (a power of
    /// two) in a seeded random order. `None` serves points in sequence order.
    #[serde(default)]
    pub shuffle_block: Option<usize>,
    /// LHS only: points per stratified block.
    #[serde(default = "default_lhs_block")]
    pub lhs_block: usize,
    /// LHS only: draw a fresh block when the current one runs out.
    #[serde(default = "default_true")]
    pub lhs_refill: bool,
}

fn default_lhs_block() -> usize {
    1024
}

fn default_true() -> bool {
    true
}

impl StreamSpec {
    pub fn new(kind: StreamKind, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            seed,
            skip: 0,
            digital_shift: false,
            shuffle_block: None,
            lhs_block: default_lhs_block(),
            lhs_refill: true,
        }
    }

    pub fn with_skip(mut self, skip: u64) -> Self {
        self.skip = skip;
        self
    }

    pub fn with_digital_shift(mut self, on: bool) -> Self {
        self.digital_shift = on;
        self
    }

    pub fn with_shuffle_block(mut self, block: Option<usize>) -> Self {
        self.shuffle_block = block;
        self
    }

    pub fn with_lhs_block(mut self, block: usize, refill: bool) -> Self {
        self.lhs_block = block;
        self.lhs_refill = refill;
        self
    }

    pub fn build(&self) -> Result<UniformStream, LdsError> {
        UniformStream::new(self.clone())
    }
}

/// Anything that hands out points in `[0,1)^dim`.
pub trait UniformSource {
    fn dim(&self) -> usize;
    /// Write the next point into `out` (length `dim`).
    fn fill_point(&mut self, out: &mut [f64]) -> Result<(), LdsError>;
    fn points_emitted(&self) -> u64;
    fn coordinates_consumed(&self) -> u64 {
        self.points_emitted() * self.dim() as u64
    }
}

#[derive(Clone, Debug)]
enum State {
    Srs(CounterRng),
    Lhs { rng_seed: u64, blocks: u64, block: Vec<f64>, pos: usize },
    Sobol(SobolGenerator),
    SobolShuffled { gen: SobolGenerator, rng: CounterRng, block: Vec<u32>, pos: usize },
}

/// A deterministic uniform stream built from a [`StreamSpec`].
#[derive(Clone, Debug)]
pub struct UniformStream {
    spec: StreamSpec,
    state: State,
    emitted: u64,
}

const SHIFT_TAG: u64 = 0x5348_4946_54;
const ORDER_TAG: u64 = 0x4f52_4445_52;

impl UniformStream {
    pub fn new(spec: StreamSpec) -> Result<Self, LdsError> {
        if spec.dim == 0 {
            return Err(LdsError::ZeroDimension);
        }
        let state = match spec.kind {
            StreamKind::Srs => State::Srs(CounterRng::new(spec.seed)),
            StreamKind::Lhs => {
                if spec.lhs_block == 0 {
                    return Err(LdsError::InvalidOption("lhs block size must be at least 1".into()));
                }
                State::Lhs { rng_seed: spec.seed, blocks: 0, block: Vec::new(), pos: 0 }
            }
            StreamKind::Sobol => {
                let mut gen = SobolGenerator::with_skip(spec.dim, spec.skip)?;
                if spec.digital_shift {
                    gen = gen.with_digital_shift(derive_seed(spec.seed, SHIFT_TAG));
                }
                match spec.shuffle_block {
                    None => State::Sobol(gen),
                    Some(b) => {
                        if b == 0 || !b.is_power_of_two() {
                            return Err(LdsError::InvalidOption(format!("shuffle block {b} is not a power of two")));
                        }
                        State::SobolShuffled {
                            gen,
                            rng: CounterRng::new(derive_seed(spec.seed, ORDER_TAG)),
                            block: Vec::new(),
                            pos: 0,
                        }
                    }
                }
            }
        };
        let mut s = Self { spec, state, emitted: 0 };
        if s.spec.kind != StreamKind::Sobol {
            let mut buf = vec![0.0; s.spec.dim];
            for _ in 0..s.spec.skip {
                s.fill_point(&mut buf)?;
            }
            s.emitted = 0;
        }
        Ok(s)
    }

    pub fn spec(&self) -> &StreamSpec {
        &self.spec
    }

    pub fn kind(&self) -> StreamKind {
        self.spec.kind
    }

    pub fn next_point(&mut self) -> Result<Vec<f64>, LdsError> {
        let mut out = vec![0.0; self.spec.dim];
        self.fill_point(&mut out)?;
        Ok(out)
    }

    /// Next `n` points as rows.
    pub fn take_points(&mut self, n: usize) -> Result<Vec<Vec<f64>>, LdsError> {
        (0..n).map(|_| self.next_point()).collect()
    }
}

const INV_2_32: f64 = 1.0 / 4_294_967_296.0;

impl UniformSource for UniformStream {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn fill_point(&mut self, out: &mut [f64]) -> Result<(), LdsError> {
        let d = self.spec.dim;
        if out.len() != d {
            return Err(LdsError::BufferLength { expected: d, got: out.len() });
        }
        match &mut self.state {
            State::Srs(rng) => {
                for o in out.iter_mut() {
                    *o = rng.next_f64();
                }
            }
            State::Lhs { rng_seed, blocks, block, pos } => {
                let n = self.spec.lhs_block;
                if *pos == block.len() / d.max(1) || block.is_empty() {
                    if *blocks > 0 && !self.spec.lhs_refill {
                        return Err(LdsError::LhsExhausted(n));
                    }
                    let m = lhs_block(n, d, derive_seed(*rng_seed, *blocks));
                    // store row-major
                    *block = m.transpose().as_slice().to_vec();
                    *blocks += 1;
                    *pos = 0;
                }
                out.copy_from_slice(&block[*pos * d..(*pos + 1) * d]);
                *pos += 1;
            }
            State::Sobol(gen) => gen.next_point(out)?,
            State::SobolShuffled { gen, rng, block, pos } => {
                let b = self.spec.shuffle_block.unwrap_or(1);
                if *pos == b || block.is_empty() {
                    let mut raw = vec![0u32; b * d];
                    for row in raw.chunks_mut(d) {
                        gen.next_raw(row)?;
                    }
                    let mut order: Vec<usize> = (0..b).collect();
                    rng.shuffle(&mut order);
                    block.clear();
                    for k in order {
                        block.extend_from_slice(&raw[k * d..(k + 1) * d]);
                    }
                    *pos = 0;
                }
                for (o, &r) in out.iter_mut().zip(&block[*pos * d..(*pos + 1) * d]) {
                    *o = r as f64 * INV_2_32;
                }
                *pos += 1;
            }
        }
        self.emitted += 1;
        Ok(())
    }

    fn points_emitted(&self) -> u64 {
        self.emitted
    }
}
