use crate::lds::{LdsError, UniformSource};
use crate::netcase::NetworkCase;
use crate::special::inv_norm_cdf;

/// `(bus, P MW, Q MVAr)` for every loaded bus of one sample.
pub type LoadSample = Vec<(u32, f64, f64)>;

/// Buses with a nonzero base active or reactive load, in case order.
pub fn loaded_buses(case: &NetworkCase) -> Vec<u32> {
    case.buses().iter().filter(|b| b.p_load != 0.0 || b.q_load != 0.0).map(|b| b.id).collect()
}

/// Draw `n` load vectors: `P ~ N(base, (sigma_frac * |base|)^2)`, clipped at
/// zero for positive base loads, with `Q` scaled to keep the base power factor.
///
/// A stream whose dimension equals the number of loaded buses supplies one
/// point per sample; any other dimension is read coordinate by coordinate.
pub fn sample_loads<S: UniformSource + ?Sized>(
    case: &NetworkCase,
    n: usize,
    sigma_frac: f64,
    stream: &mut S,
) -> Result<Vec<LoadSample>, LdsError> {
    let buses: Vec<_> = case.buses().iter().filter(|b| b.p_load != 0.0 || b.q_load != 0.0).collect();
    let mut buf = vec![0.0; stream.dim()];
    let mut pos = buf.len();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut sample = Vec::with_capacity(buses.len());
        for b in &buses {
            if pos == buf.len() {
                stream.fill_point(&mut buf)?;
                pos = 0;
            }
            let z = inv_norm_cdf(buf[pos]);
            pos += 1;
            let mut p = b.p_load + sigma_frac * b.p_load.abs() * z;
            if b.p_load > 0.0 {
                p = p.max(0.0);
            }
            let q = if b.p_load != 0.0 { b.q_load * p / b.p_load } else { b.q_load };
            sample.push((b.id, p, q));
        }
        out.push(sample);
    }
    Ok(out)
}
