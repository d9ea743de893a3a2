use super::LdsError;

/// Lower and upper bounds on the star discrepancy of a point set.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DiscrepancyBracket {
    pub lower: f64,
    pub upper: f64,
}

/// Exact star discrepancy of a 1-D point set (sorted internally).
pub fn star_discrepancy_1d(points: &[f64]) -> Result<f64, LdsError> {
    if points.is_empty() {
        return Err(LdsError::EmptyPointSet);
    }
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max))
}

/// Bracket the star discrepancy of `points` (each row a point in `[0,1]^d`,
/// `d <= 3`) using anchored boxes on the grid formed by `resolution` uniform
/// steps per axis merged with the data coordinates.
///
/// Cost is the product over axes of `resolution + n`, so keep it modest in 3-D.
pub fn star_discrepancy_grid<P: AsRef<[f64]>>(points: &[P], resolution: usize) -> Result<DiscrepancyBracket, LdsError> {
    if points.is_empty() {
        return Err(LdsError::EmptyPointSet);
    }
    let d = points[0].as_ref().len();
    if d == 0 {
        return Err(LdsError::ZeroDimension);
    }
    if d > 3 {
        return Err(LdsError::DimensionTooLarge(d));
    }
    if resolution == 0 {
        return Err(LdsError::InvalidOption("grid resolution must be at least 1".into()));
    }
    for (index, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != d {
            return Err(LdsError::RaggedPoints { index, expected: d, got: p.len() });
        }
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(LdsError::InvalidOption(format!("point {index} lies outside the unit cube")));
        }
    }
    let n = points.len();

    // axis grids, each starting at 0 and ending at 1
    let grids: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut g: Vec<f64> = (0..=resolution).map(|k| k as f64 / resolution as f64).collect();
            g.extend(points.iter().map(|p| p.as_ref()[j]));
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    let mut shape = [1usize; 3];
    for j in 0..d {
        shape[j] = grids[j].len();
    }
    let idx = |i: [usize; 3]| (i[0] * shape[1] + i[1]) * shape[2] + i[2];

    // closed prefix counts: cnt[i] = #{x : x_j <= g_j[i_j] for all j}
    let mut cnt = vec![0u32; shape[0] * shape[1] * shape[2]];
    for p in points {
        let p = p.as_ref();
        let mut at = [0usize; 3];
        for j in 0..d {
            at[j] = grids[j].binary_search_by(|g| g.total_cmp(&p[j])).expect("data coordinate is on the grid");
        }
        cnt[idx(at)] += 1;
    }
    for axis in 0..3 {
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let cur = [i0, i1, i2];
                    if cur[axis] == 0 {
                        continue;
                    }
                    let mut prev = cur;
                    prev[axis] -= 1;
                    cnt[idx(cur)] += cnt[idx(prev)];
                }
            }
        }
    }

    let nf = n as f64;
    let vol = |i: [usize; 3]| (0..d).map(|j| grids[j][i[j]]).product::<f64>();
    let closed = |i: [usize; 3]| cnt[idx(i)] as f64 / nf;
    // open count #{x < g}: step back one grid index on every active axis
    let open = |i: [usize; 3]| {
        if (0..d).any(|j| i[j] == 0) {
            0.0
        } else {
            let mut b = i;
            for j in 0..d {
                b[j] -= 1;
            }
            closed(b)
        }
    };

    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for i0 in 0..shape[0] {
        for i1 in 0..shape[1] {
            for i2 in 0..shape[2] {
                let hi = [i0, i1, i2];
                let v_hi = vol(hi);
                lower = lower.max((v_hi - open(hi)).abs()).max((closed(hi) - v_hi).abs());
                if (0..d).any(|j| hi[j] == 0) {
                    continue;
                }
                let mut lo = hi;
                for j in 0..d {
                    lo[j] -= 1;
                }
                // a in the cell (lo, hi]: closed(lo) <= #{x < a}/n <= closed(hi)
                let cell = (v_hi - closed(lo)).max(closed(hi) - vol(lo));
                upper = upper.max(cell);
            }
        }
    }
    Ok(DiscrepancyBracket { lower, upper: upper.max(lower) })
}
