use std::collections::{HashMap, HashSet};

use super::{BranchRecord, BusRecord, BusType, GenCost, GenRecord, NetcaseError, NetworkCase};

struct Matrix {
    rows: Vec<Vec<f64>>,
    lines: Vec<usize>,
}

fn syntax(line: usize, msg: impl Into<String>) -> NetcaseError {
    NetcaseError::Syntax { line, msg: msg.into() }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '\'' => in_str = !in_str,
            '%' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_number(tok: &str, line: usize) -> Result<f64, NetcaseError> {
    match tok {
        "Inf" | "inf" | "+Inf" => Ok(f64::INFINITY),
        "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| syntax(line, format!("bad number '{tok}'"))),
    }
}

/// Read `mpc.<name> = [ ... ];` matrices and `mpc.baseMVA`; other `mpc.*`
/// assignments (version strings, cell arrays, extra matrices) are skipped.
fn scan(text: &str) -> Result<(Option<f64>, HashMap<String, Matrix>), NetcaseError> {
    let mut base = None;
    let mut mats: HashMap<String, Matrix> = HashMap::new();
    // (name, closing bracket, matrix, current row)
    let mut open: Option<(String, char, Matrix, Vec<f64>, usize)> = None;

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let mut rest = strip_comment(raw).trim();
        if open.is_none() {
            if rest.is_empty() || rest.starts_with("function") {
                continue;
            }
            let Some(stmt) = rest.strip_prefix("mpc.") else {
                return Err(syntax(lineno, format!("unexpected statement '{rest}'")));
            };
            let Some((name, rhs)) = stmt.split_once('=') else {
                return Err(syntax(lineno, "expected '=' after field name"));
            };
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(syntax(lineno, format!("bad field name '{name}'")));
            }
            let rhs = rhs.trim();
            if let Some(body) = rhs.strip_prefix('[') {
                open = Some((name.to_string(), ']', Matrix { rows: Vec::new(), lines: Vec::new() }, Vec::new(), lineno));
                rest = body;
            } else if let Some(body) = rhs.strip_prefix('{') {
                open = Some((name.to_string(), '}', Matrix { rows: Vec::new(), lines: Vec::new() }, Vec::new(), lineno));
                rest = body;
            } else {
                let value = rhs.trim_end_matches(';').trim();
                if name == "baseMVA" {
                    base = Some(parse_number(value, lineno)?);
                }
                continue;
            }
        }
        let (_, close, mat, row, _) = open.as_mut().expect("matrix is open");
        let (body, closed) = match rest.find(*close) {
            Some(i) => {
                let tail = rest[i + 1..].trim();
                if !(tail.is_empty() || tail == ";") {
                    return Err(syntax(lineno, format!("unexpected text after '{close}': '{tail}'")));
                }
                (&rest[..i], true)
            }
            None => (rest, false),
        };
        if *close == ']' {
            for (pi, piece) in body.split(';').enumerate() {
                if pi > 0 && !row.is_empty() {
                    mat.rows.push(std::mem::take(row));
                    mat.lines.push(lineno);
                }
                for tok in piece.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                    row.push(parse_number(tok, lineno)?);
                }
            }
            // newline also ends a row
            if !row.is_empty() {
                mat.rows.push(std::mem::take(row));
                mat.lines.push(lineno);
            }
        }
        if closed {
            let (name, close, mat, _, start) = open.take().expect("matrix is open");
            if close == ']' {
                if let Some(w) = mat.rows.first().map(Vec::len) {
                    if let Some(bad) = mat.rows.iter().position(|r| r.len() != w) {
                        return Err(syntax(mat.lines[bad], format!("mpc.{name}: row has {} columns, expected {w}", mat.rows[bad].len())));
                    }
                }
                if mats.insert(name.clone(), mat).is_some() {
                    return Err(syntax(start, format!("mpc.{name} assigned twice")));
                }
            }
        }
    }
    if let Some((name, close, _, _, start)) = open {
        return Err(syntax(start, format!("mpc.{name} is never closed with '{close}'")));
    }
    Ok((base, mats))
}

fn need<'a>(mats: &'a HashMap<String, Matrix>, name: &'static str, min_cols: usize) -> Result<&'a Matrix, NetcaseError> {
    let m = mats.get(name).ok_or(NetcaseError::MissingSection(name))?;
    if let Some(r) = m.rows.first() {
        if r.len() < min_cols {
            return Err(syntax(m.lines[0], format!("mpc.{name} needs at least {min_cols} columns, found {}", r.len())));
        }
    }
    Ok(m)
}

fn as_id(v: f64, line: usize, what: &str) -> Result<u32, NetcaseError> {
    if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
        return Err(syntax(line, format!("{what} {v} is not a bus number")));
    }
    Ok(v as u32)
}

/// Parse the matrix literals of a MATPOWER case body.
///
/// Out-of-service generators and branches (status 0) are dropped.
/// Only polynomial costs (model 2) of degree at most 2 are accepted.
pub fn parse_matpower(text: &str) -> Result<NetworkCase, NetcaseError> {
    let (base, mats) = scan(text)?;
    let base_mva = base.ok_or(NetcaseError::MissingSection("baseMVA"))?;

    let bus_m = need(&mats, "bus", 13)?;
    let mut buses = Vec::with_capacity(bus_m.rows.len());
    let mut seen = HashSet::new();
    for (r, line) in bus_m.rows.iter().zip(&bus_m.lines) {
        let id = as_id(r[0], *line, "bus id")?;
        if !seen.insert(id) {
            return Err(syntax(*line, format!("duplicate bus id {id}")));
        }
        let bus_type = match r[1] as i64 {
            3 => BusType::Slack,
            2 => BusType::Pv,
            1 => BusType::Pq,
            t => return Err(syntax(*line, format!("bus {id}: unsupported bus type {t}"))),
        };
        buses.push(BusRecord {
            id,
            bus_type,
            p_load: r[2],
            q_load: r[3],
            gs: r[4],
            bs: r[5],
            base_kv: r[9],
            v_max: r[11],
            v_min: r[12],
        });
    }

    let gen_m = need(&mats, "gen", 10)?;
    let cost_m = need(&mats, "gencost", 4)?;
    let ng_all = gen_m.rows.len();
    if cost_m.rows.len() != ng_all && cost_m.rows.len() != 2 * ng_all {
        return Err(NetcaseError::BadRow {
            section: "gencost",
            row: 1,
            msg: format!("{} cost rows for {ng_all} generators", cost_m.rows.len()),
        });
    }
    let mut gens = Vec::with_capacity(ng_all);
    for (i, (r, line)) in gen_m.rows.iter().zip(&gen_m.lines).enumerate() {
        let cost = parse_cost(&cost_m.rows[i], cost_m.lines[i])?;
        if r[7] <= 0.0 {
            continue;
        }
        gens.push(GenRecord {
            bus: as_id(r[0], *line, "generator bus")?,
            pg: r[1],
            q_max: r[3],
            q_min: r[4],
            vg: r[5],
            p_max: r[8],
            p_min: r[9],
            cost,
        });
    }

    let br_m = need(&mats, "branch", 11)?;
    let mut branches = Vec::with_capacity(br_m.rows.len());
    for (r, line) in br_m.rows.iter().zip(&br_m.lines) {
        if r[10] <= 0.0 {
            continue;
        }
        branches.push(BranchRecord {
            from_bus: as_id(r[0], *line, "from bus")?,
            to_bus: as_id(r[1], *line, "to bus")?,
            r: r[2],
            x: r[3],
            b_charging: r[4],
            s_max: (r[5] > 0.0).then_some(r[5]),
            p_max: None,
            dv_max: None,
            tap: if r[8] == 0.0 { 1.0 } else { r[8] },
            shift: r[9],
        });
    }
    NetworkCase::new(base_mva, buses, branches, gens)
}

fn parse_cost(r: &[f64], line: usize) -> Result<GenCost, NetcaseError> {
    if r[0] != 2.0 {
        return Err(syntax(line, format!("cost model {} not supported (only polynomial model 2)", r[0])));
    }
    let n = r[3];
    if n.fract() != 0.0 || !(0.0..=3.0).contains(&n) {
        return Err(syntax(line, format!("polynomial cost with {n} coefficients not supported (degree must be at most 2)")));
    }
    let n = n as usize;
    if r.len() < 4 + n {
        return Err(syntax(line, format!("cost row needs {n} coefficients")));
    }
    // highest order first
    let c = &r[4..4 + n];
    let coef = |p: usize| if p < n { c[n - 1 - p] } else { 0.0 };
    Ok(GenCost { a: coef(0), b: coef(1), c: coef(2) })
}
