#![allow(dead_code)]

use popf_core::lds::{
    lhs_block, star_discrepancy_1d, star_discrepancy_grid, CounterRng, LdsError, SobolGenerator, StreamKind, StreamSpec,
    UniformSource,
};

pub const TABLE: &str = include_str!("../../data/sobol_joe_kuo_64.txt");

/// Direction integers v_1..v_32 for `dim`, derived straight from the data
/// file: m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}.
pub fn oracle_directions(dim: usize) -> [u32; 32] {
    let line = TABLE
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse::<u64>().unwrap()).collect::<Vec<_>>())
        .find(|f| f[0] == dim as u64)
        .unwrap();
    let (s, a) = (line[1] as usize, line[2]);
    let mut m: Vec<u64> = vec![0; 33];
    if s == 0 {
        m.iter_mut().for_each(|x| *x = 1);
    } else {
        for k in 1..=s {
            m[k] = line[2 + k];
        }
        for k in s + 1..=32 {
            let mut v = m[k - s] ^ (m[k - s] << s);
            for j in 1..s {
                if (a >> (s - 1 - j)) & 1 == 1 {
                    v ^= m[k - j] << j;
                }
            }
            m[k] = v;
        }
    }
    let mut out = [0u32; 32];
    for k in 1..=32 {
        out[k - 1] = (m[k] << (32 - k)) as u32;
    }
    out
}

/// Point `i` of the Gray-code Sobol sequence: XOR of v_k over set bits of gray(i).
pub fn oracle_point(v: &[u32; 32], i: u64) -> u32 {
    let g = i ^ (i >> 1);
    (0..32).filter(|&b| (g >> b) & 1 == 1).fold(0, |acc, b| acc ^ v[b])
}

pub fn sobol_matches_bit_oracle() {
    for dim in [1usize, 2, 3, 5, 8, 13, 32, 64] {
        let mut gen = SobolGenerator::new(dim).unwrap();
        let vs: Vec<[u32; 32]> = (1..=dim).map(oracle_directions).collect();
        let mut raw = vec![0u32; dim];
        for i in 1..=1024u64 {
            gen.next_raw(&mut raw).unwrap();
            for j in 0..dim {
                assert_eq!(raw[j], oracle_point(&vs[j], i), "dim {}/{dim}, point {i}", j + 1);
            }
        }
    }
}

pub fn first_sobol_points() {
    let mut s = StreamSpec::new(StreamKind::Sobol, 1, 0).build().unwrap();
    let xs: Vec<f64> = s.take_points(3).unwrap().into_iter().map(|p| p[0]).collect();
    assert_eq!(xs, vec![0.5, 0.75, 0.25]);
}

pub fn bundled_table_checksum() {
    use sha2::{Digest, Sha256};
    let hex: String = Sha256::digest(TABLE.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(hex, "479313768ea7f227f8077dced4528e5a0ee72061b1164b65ea6d7934e9d5da3e");
}

/// `sup_a |a - #{x <= a}/n|` on a uniform grid plus both sides of each point.
pub fn grid_sup_1d(xs: &[f64], step: f64) -> f64 {
    let n = xs.len() as f64;
    let delta = |a: f64, closed: bool| {
        let c = xs.iter().filter(|&&x| if closed { x <= a } else { x < a }).count() as f64;
        (a - c / n).abs()
    };
    let mut best = 0.0f64;
    let steps = (1.0 / step).round() as usize;
    for i in 0..=steps {
        let a = i as f64 * step;
        best = best.max(delta(a, true)).max(delta(a, false));
    }
    for &x in xs {
        best = best.max(delta(x, true)).max(delta(x, false));
    }
    best
}

pub fn one_d_discrepancy_examples() {
    assert_eq!(star_discrepancy_1d(&[0.5]).unwrap(), 0.5);
    assert_eq!(star_discrepancy_1d(&[0.0]).unwrap(), 1.0);
    let mid: Vec<f64> = (1..=10).map(|i| (2 * i - 1) as f64 / 20.0).collect();
    let d = star_discrepancy_1d(&mid).unwrap();
    assert!((d - 0.05).abs() < 1e-15);
    assert!((grid_sup_1d(&mid, 1e-5) - 0.05).abs() < 1e-9);
    assert!((grid_sup_1d(&[0.0], 1e-5) - 1.0).abs() < 1e-9);
    assert_eq!(star_discrepancy_1d(&[]), Err(LdsError::EmptyPointSet));
}



/// Closed anchored boxes `[0, a]` on a `res`-step grid plus data coordinates.
pub fn dense_grid_2d(p: &[[f64; 2]], res: usize) -> f64 {
    let n = p.len() as f64;
    let mut ax: Vec<f64> = (0..=res).map(|i| i as f64 / res as f64).collect();
    let mut ay = ax.clone();
    ax.extend(p.iter().map(|q| q[0]));
    ay.extend(p.iter().map(|q| q[1]));
    let mut best = 0.0f64;
    for &a in &ax {
        for &b in &ay {
            let closed = p.iter().filter(|q| q[0] <= a && q[1] <= b).count() as f64;
            let open = p.iter().filter(|q| q[0] < a && q[1] < b).count() as f64;
            best = best.max((a * b - closed / n).abs()).max((a * b - open / n).abs());
        }
    }
    best
}

pub fn single_centre_point_in_two_d() {
    let b = star_discrepancy_grid(&[[0.5, 0.5]], 16).unwrap();
    assert!(b.lower >= 0.75 - 1e-12, "{b:?}");
    let dense = dense_grid_2d(&[[0.5, 0.5]], 1000);
    assert!((dense - 0.75).abs() < 1e-12, "{dense}");
    assert!(b.upper >= dense - 1e-12);
}

pub fn grid_rejects_empty_and_high_dimension() {
    let empty: Vec<[f64; 2]> = vec![];
    assert_eq!(star_discrepancy_grid(&empty, 8), Err(LdsError::EmptyPointSet));
    assert_eq!(star_discrepancy_grid(&[[0.1, 0.2, 0.3, 0.4]], 8), Err(LdsError::DimensionTooLarge(4)));
}

pub fn sobol_128_beats_srs_in_two_d() {
    let sobol = StreamSpec::new(StreamKind::Sobol, 2, 0).build().unwrap().take_points(128).unwrap();
    let sobol_upper = star_discrepancy_grid(&sobol, 128).unwrap().upper;
    let wins = (0..10u64)
        .filter(|&seed| {
            let srs = StreamSpec::new(StreamKind::Srs, 2, seed).build().unwrap().take_points(128).unwrap();
            sobol_upper < star_discrepancy_grid(&srs, 128).unwrap().upper
        })
        .count();
    assert!(wins >= 9, "sobol below srs for {wins}/10 seeds");
}

pub fn lhs_examples() {
    let b = lhs_block(2, 2, 5);
    for j in 0..2 {
        let lo = (0..2).filter(|&i| b[(i, j)] < 0.5).count();
        assert_eq!(lo, 1);
    }
    let b = lhs_block(1000, 1, 3);
    let mut xs: Vec<f64> = b.column(0).iter().copied().collect();
    xs.sort_by(f64::total_cmp);
    let dev = xs.iter().enumerate().map(|(i, &x)| ((i + 1) as f64 / 1000.0 - x).max(x - i as f64 / 1000.0)).fold(0.0, f64::max);
    assert!(dev <= 2.0 / 1000.0, "{dev}");
    assert_eq!(lhs_block(7, 3, 9), lhs_block(7, 3, 9));
}

pub fn every_coordinate_is_in_unit_interval() {
    for spec in [
        StreamSpec::new(StreamKind::Srs, 1, 1),
        StreamSpec::new(StreamKind::Lhs, 1, 2),
        StreamSpec::new(StreamKind::Sobol, 1, 3),
        StreamSpec::new(StreamKind::Sobol, 4, 3).with_digital_shift(true).with_shuffle_block(Some(256)),
        StreamSpec::new(StreamKind::Srs, 4, 1),
    ] {
        let mut s = spec.build().unwrap();
        let d = s.dim();
        let mut buf = vec![0.0; d];
        for _ in 0..1_000_000 / d {
            s.fill_point(&mut buf).unwrap();
            assert!(buf.iter().all(|&x| (0.0..1.0).contains(&x)), "{:?}: {buf:?}", spec.kind);
        }
    }
}

/// rand_core's `seed_from_u64`: PCG32 output fills the 32-byte key.
pub fn oracle_key(seed: u64) -> [u32; 8] {
    const MUL: u64 = 6364136223846793005;
    const INC: u64 = 11634580027462260723;
    let mut state = seed;
    let mut key = [0u32; 8];
    for k in key.iter_mut() {
        state = state.wrapping_mul(MUL).wrapping_add(INC);
        let xorshifted = (((state >> 18) ^ state) >> 27) as u32;
        *k = xorshifted.rotate_right((state >> 59) as u32);
    }
    key
}

/// ChaCha20 block with a 64-bit block counter and zero stream id.
pub fn oracle_block(key: &[u32; 8], counter: u64) -> [u32; 16] {
    fn qr(s: &mut [u32; 16], a: usize, b: usize, c: usize, d: usize) {
        s[a] = s[a].wrapping_add(s[b]);
        s[d] = (s[d] ^ s[a]).rotate_left(16);
        s[c] = s[c].wrapping_add(s[d]);
        s[b] = (s[b] ^ s[c]).rotate_left(12);
        s[a] = s[a].wrapping_add(s[b]);
        s[d] = (s[d] ^ s[a]).rotate_left(8);
        s[c] = s[c].wrapping_add(s[d]);
        s[b] = (s[b] ^ s[c]).rotate_left(7);
    }
    let mut init = [0u32; 16];
    init[..4].copy_from_slice(&[0x6170_7865, 0x3320_646e, 0x7962_2d32, 0x6b20_6574]);
    init[4..12].copy_from_slice(key);
    init[12] = counter as u32;
    init[13] = (counter >> 32) as u32;
    let mut s = init;
    for _ in 0..10 {
        qr(&mut s, 0, 4, 8, 12);
        qr(&mut s, 1, 5, 9, 13);
        qr(&mut s, 2, 6, 10, 14);
        qr(&mut s, 3, 7, 11, 15);
        qr(&mut s, 0, 5, 10, 15);
        qr(&mut s, 1, 6, 11, 12);
        qr(&mut s, 2, 7, 8, 13);
        qr(&mut s, 3, 4, 9, 14);
    }
    for (x, y) in s.iter_mut().zip(init) {
        *x = x.wrapping_add(y);
    }
    s
}

pub fn oracle_u64s(seed: u64, n: usize) -> Vec<u64> {
    let key = oracle_key(seed);
    let words: Vec<u32> = (0..).flat_map(|c| oracle_block(&key, c)).take(2 * n).collect();
    words.chunks(2).map(|w| w[0] as u64 | (w[1] as u64) << 32).collect()
}

pub fn chacha_block_matches_rfc_vector() {
    // RFC 8439 appendix A.1, test vector 1: zero key, zero nonce, counter 0.
    let b = oracle_block(&[0; 8], 0);
    let bytes: Vec<u8> = b.iter().flat_map(|w| w.to_le_bytes()).collect();
    assert_eq!(&bytes[..16], &[0x76, 0xb8, 0xe0, 0xad, 0xa0, 0xf1, 0x3d, 0x90, 0x40, 0x5d, 0x6a, 0xe5, 0x53, 0x86, 0xbd, 0x28]);
    assert_eq!(&bytes[48..], &[0x6a, 0x43, 0xb8, 0xf4, 0x15, 0x18, 0xa1, 0x1c, 0xc3, 0x87, 0xb6, 0x69, 0xb2, 0xee, 0x65, 0x86]);
}

pub fn prng_matches_independent_chacha20() {
    for seed in [0u64, 1, 42, u64::MAX] {
        let mut r = CounterRng::new(seed);
        let ours: Vec<u64> = (0..40).map(|_| r.next_u64()).collect();
        assert_eq!(ours, oracle_u64s(seed, 40), "seed {seed}");
    }
    let mut r = CounterRng::new(0);
    let f = r.next_f64();
    assert_eq!(f, (oracle_u64s(0, 1)[0] >> 11) as f64 / (1u64 << 53) as f64);
}

fn sobol_1d(n: usize) -> Vec<f64> {
    StreamSpec::new(StreamKind::Sobol, 1, 0).build().unwrap().take_points(n).unwrap().into_iter().map(|p| p[0]).collect()
}

/// Exact 1-D D* of the first n Sobol points for n = 2^4 .. 2^12, halfway
/// points included, against C ln(n) / n with C fitted by least squares.
pub fn sobol_discrepancy_decay() -> f64 {
    let xs = sobol_1d(1 << 12);
    let ns: Vec<usize> = (4..=12).flat_map(|k| [1usize << k, (1usize << k) * 3 / 2]).filter(|&n| n <= 1 << 12).collect();
    let pts: Vec<(f64, f64)> = ns.iter().map(|&n| ((n as f64).ln() / n as f64, star_discrepancy_1d(&xs[..n]).unwrap())).collect();
    let c = pts.iter().map(|(g, d)| g * d).sum::<f64>() / pts.iter().map(|(g, _)| g * g).sum::<f64>();
    for &(g, d) in &pts {
        assert!(d <= 1.5 * c * g, "D* {d} above 1.5 C ln(n)/n with C = {c}");
    }
    // log-log slope of D* against n
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / lx.len() as f64, ly.iter().sum::<f64>() / ly.len() as f64);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((-1.2..=-0.8).contains(&slope), "slope {slope}");
    c
}

/// Sobol D* against the 20-seed mean of SRS D*, in 1-D (exact) and 2-D (brackets).
pub fn sobol_beats_mean_srs() {
    let sizes = [64usize, 100, 128, 200, 256, 500, 512, 1000, 1024, 2048, 4096];
    let xs = sobol_1d(4096);
    let s2 = StreamSpec::new(StreamKind::Sobol, 2, 0).build().unwrap().take_points(1024).unwrap();
    for &n in &sizes {
        let sobol = star_discrepancy_1d(&xs[..n]).unwrap();
        let srs: f64 = (0..20u64)
            .map(|seed| {
                let p: Vec<f64> = StreamSpec::new(StreamKind::Srs, 1, seed).build().unwrap().take_points(n).unwrap().into_iter().map(|p| p[0]).collect();
                star_discrepancy_1d(&p).unwrap()
            })
            .sum::<f64>()
            / 20.0;
        assert!(sobol < srs, "n = {n}: sobol {sobol} vs srs mean {srs}");
        if n <= 1024 {
            let up = star_discrepancy_grid(&s2[..n], 64).unwrap().upper;
            let srs_lo: f64 = (0..20u64)
                .map(|seed| star_discrepancy_grid(&StreamSpec::new(StreamKind::Srs, 2, seed).build().unwrap().take_points(n).unwrap(), 64).unwrap().lower)
                .sum::<f64>()
                / 20.0;
            assert!(up < srs_lo, "2-D n = {n}: sobol upper {up} vs srs mean lower {srs_lo}");
        }
    }
}
