use std::sync::OnceLock;

use super::{CounterRng, LdsError};

/// Bits of precision per coordinate.
pub const SOBOL_BITS: usize = 32;
/// Dimensions covered by the bundled direction-number table.
pub const SOBOL_MAX_DIM: usize = 64;

const TABLE_TEXT: &str = include_str!("../../data/sobol_joe_kuo_64.txt");

/// One row of the direction-number file: primitive polynomial of degree
/// `degree` with interior coefficient bits `coeff`, and initial direction
/// integers `m` (`m.len() == degree`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionEntry {
    pub dim: usize,
    pub degree: u32,
    pub coeff: u32,
    pub m: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct DirectionTable {
    entries: Vec<DirectionEntry>,
}

impl DirectionTable {
    /// Parse the text format: `#` comments, then one line per dimension
    /// `dim degree coeff m_1 .. m_degree`. Dimension 1 is written `1 0 0`.
    pub fn parse(text: &str) -> Result<Self, LdsError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Result<Vec<u32>, _> = line.split_whitespace().map(str::parse::<u32>).collect();
            let nums = nums.map_err(|e| LdsError::DirectionTable(format!("line {}: {e}", lineno + 1)))?;
            if nums.len() < 3 {
                return Err(LdsError::DirectionTable(format!("line {}: too few fields", lineno + 1)));
            }
            let (dim, degree, coeff) = (nums[0] as usize, nums[1], nums[2]);
            let m = nums[3..].to_vec();
            if m.len() != degree as usize {
                return Err(LdsError::DirectionTable(format!(
                    "line {}: degree {degree} but {} initial values",
                    lineno + 1,
                    m.len()
                )));
            }
            for (k, &mk) in m.iter().enumerate() {
                // m_k must be odd and below 2^k
                if mk % 2 == 0 || mk >= (1u32 << (k + 1)) {
                    return Err(LdsError::DirectionTable(format!("line {}: bad m_{} = {mk}", lineno + 1, k + 1)));
                }
            }
            if dim != entries.len() + 1 {
                return Err(LdsError::DirectionTable(format!("line {}: expected dimension {}", lineno + 1, entries.len() + 1)));
            }
            entries.push(DirectionEntry { dim, degree, coeff, m });
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, dim: usize) -> Option<&DirectionEntry> {
        dim.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    /// Direction integers `v_1..v_32` (as left-aligned 32-bit words) for a
    /// 1-based dimension.
    pub fn direction_integers(&self, dim: usize) -> Option<[u32; SOBOL_BITS]> {
        let e = self.entry(dim)?;
        let mut v = [0u32; SOBOL_BITS];
        if e.degree == 0 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = 1u32 << (SOBOL_BITS - 1 - i);
            }
            return Some(v);
        }
        let s = e.degree as usize;
        for i in 0..s.min(SOBOL_BITS) {
            v[i] = e.m[i] << (SOBOL_BITS - 1 - i);
        }
        for i in s..SOBOL_BITS {
            let mut vi = v[i - s] ^ (v[i - s] >> s);
            for k in 1..s {
                if (e.coeff >> (s - 1 - k)) & 1 == 1 {
                    vi ^= v[i - k];
                }
            }
            v[i] = vi;
        }
        Some(v)
    }
}

/// The bundled table (first 64 dimensions), parsed once.
pub fn direction_table() -> &'static DirectionTable {
    static TABLE: OnceLock<DirectionTable> = OnceLock::new();
    TABLE.get_or_init(|| DirectionTable::parse(TABLE_TEXT).expect("bundled direction table is valid"))
}

/// Sobol sequence generator in Gray-code order.
///
/// The origin is never emitted: with `skip = 0` the first point has index 1,
/// so for `d = 1` the stream starts `0.5, 0.75, 0.25, ...`.
#[derive(Clone, Debug)]
pub struct SobolGenerator {
    dim: usize,
    v: Vec<[u32; SOBOL_BITS]>,
    x: Vec<u32>,
    shift: Vec<u32>,
    /// Index of the last emitted point.
    index: u64,
    skip: u64,
}

impl SobolGenerator {
    pub fn new(dim: usize) -> Result<Self, LdsError> {
        Self::with_skip(dim, 0)
    }

    /// Start after discarding the first `skip` points (index `skip + 1` comes next).
    pub fn with_skip(dim: usize, skip: u64) -> Result<Self, LdsError> {
        if dim == 0 || dim > SOBOL_MAX_DIM {
            return Err(LdsError::SobolDimension(dim));
        }
        if skip >= (1u64 << SOBOL_BITS) - 1 {
            return Err(LdsError::SobolIndexOverflow);
        }
        let table = direction_table();
        let v: Vec<_> = (1..=dim).map(|j| table.direction_integers(j).expect("dimension in table")).collect();
        let gray = skip ^ (skip >> 1);
        let x = v
            .iter()
            .map(|vj| {
                (0..SOBOL_BITS).filter(|&b| (gray >> b) & 1 == 1).fold(0u32, |acc, b| acc ^ vj[b])
            })
            .collect();
        Ok(Self { dim, v, x, shift: vec![0; dim], index: skip, skip })
    }

    /// XOR every coordinate with a seeded random 32-bit word (digital shift).
    pub fn with_digital_shift(mut self, seed: u64) -> Self {
        let mut rng = CounterRng::new(seed);
        self.shift = (0..self.dim).map(|_| rng.next_u32()).collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn skip(&self) -> u64 {
        self.skip
    }

    /// Index of the most recently emitted point (equals `skip` before the first call).
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Advance by one point and write it as 32-bit integers.
    pub fn next_raw(&mut self, out: &mut [u32]) -> Result<(), LdsError> {
        if out.len() != self.dim {
            return Err(LdsError::BufferLength { expected: self.dim, got: out.len() });
        }
        let prev = self.index;
        if prev >= (1u64 << SOBOL_BITS) - 1 {
            return Err(LdsError::SobolIndexOverflow);
        }
        let c = (!prev).trailing_zeros() as usize;
        for j in 0..self.dim {
            self.x[j] ^= self.v[j][c];
            out[j] = self.x[j] ^ self.shift[j];
        }
        self.index = prev + 1;
        Ok(())
    }

    pub fn next_point(&mut self, out: &mut [f64]) -> Result<(), LdsError> {
        let mut raw = vec![0u32; self.dim];
        self.next_raw(&mut raw)?;
        for (o, r) in out.iter_mut().zip(raw) {
            *o = r as f64 / 4_294_967_296.0;
        }
        Ok(())
    }
}
