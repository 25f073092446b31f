use std::collections::{BTreeMap, HashSet};
use std::f64::consts::FRAC_PI_2;

use super::{BranchRecord, BusRecord, GeneratorRecord, NetworkCase};
use crate::error::{Error, Result};

/// Knobs for MATPOWER ingestion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Bound substituted for unbounded angle differences, radians.
    pub default_angle_bound: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { default_angle_bound: 85f64.to_radians() }
    }
}

struct Matrix {
    rows: Vec<(usize, Vec<f64>)>,
    opened: usize,
}

/// Appends the rows found on one line; returns true once the closing bracket is seen.
/// A row ends at `;` or at the end of a line.
fn feed_rows(body: &str, lineno: usize, matrix: &mut Matrix) -> Result<bool> {
    let (body, closed) = match body.find(']') {
        Some(p) => (&body[..p], true),
        None => (body, false),
    };
    for chunk in body.split(';') {
        let mut row = Vec::new();
        parse_numbers(chunk, lineno, &mut row)?;
        if !row.is_empty() {
            matrix.rows.push((lineno, row));
        }
    }
    Ok(closed)
}

/// Parses a MATPOWER `.m` case with default options.
pub fn parse_matpower_case(text: &str) -> Result<NetworkCase> {
    parse_matpower_case_with(text, &ParseOptions::default())
}

pub fn parse_matpower_case_with(text: &str, options: &ParseOptions) -> Result<NetworkCase> {
    let mut name = String::from("case");
    let mut base_mva = None;
    let mut matrices: BTreeMap<String, Matrix> = BTreeMap::new();
    let mut open: Option<(String, Matrix)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        if let Some((key, mut matrix)) = open.take() {
            if feed_rows(line, lineno, &mut matrix)? {
                matrices.insert(key, matrix);
            } else {
                open = Some((key, matrix));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("function") {
            if let Some(eq) = rest.find('=') {
                name = rest[eq + 1..].trim().trim_end_matches(';').to_string();
            }
            continue;
        }
        let Some(rest) = line.strip_prefix("mpc.") else { continue };
        let Some(eq) = rest.find('=') else { continue };
        let key = rest[..eq].trim().to_string();
        let value = rest[eq + 1..].trim();
        if key == "baseMVA" {
            let v = value.trim_end_matches(';').trim();
            base_mva = Some(v.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid baseMVA '{v}'"),
            })?);
        } else if let Some(body) = value.strip_prefix('[') {
            let mut matrix = Matrix { rows: Vec::new(), opened: lineno };
            if feed_rows(body, lineno, &mut matrix)? {
                matrices.insert(key, matrix);
            } else {
                open = Some((key, matrix));
            }
        }
    }
    if let Some((key, matrix)) = open {
        return Err(Error::Parse {
            line: matrix.opened,
            message: format!("matrix mpc.{key} is not closed"),
        });
    }

    let base_mva = base_mva.ok_or(Error::Parse { line: 0, message: "missing mpc.baseMVA".into() })?;
    let take = |key: &str| {
        matrices
            .get(key)
            .ok_or_else(|| Error::Parse { line: 0, message: format!("missing mpc.{key}") })
    };
    let bus_m = take("bus")?;
    let gen_m = take("gen")?;
    let branch_m = take("branch")?;
    let gencost_m = matrices.get("gencost");

    let mut buses = Vec::new();
    let mut loads = BTreeMap::new();
    let mut isolated = HashSet::new();
    for (lineno, row) in &bus_m.rows {
        require_cols(row, 13, *lineno, "bus")?;
        let id = as_label(row[0], *lineno)?;
        let kind = row[1] as i64;
        if kind == 4 {
            isolated.insert(id);
            continue;
        }
        let (pd, qd) = (row[2] / base_mva, row[3] / base_mva);
        if pd != 0.0 || qd != 0.0 {
            let entry = loads.entry(id).or_insert((0.0, 0.0));
            entry.0 += pd;
            entry.1 += qd;
        }
        buses.push(BusRecord {
            id,
            shunt_g: row[4] / base_mva,
            shunt_b: row[5] / base_mva,
            v_min: row[12],
            v_max: row[11],
            is_reference: kind == 3,
        });
    }

    let costs = match gencost_m {
        Some(m) => Some(parse_costs(m, gen_m.rows.len(), base_mva)?),
        None => None,
    };
    let mut generators = Vec::new();
    for (k, (lineno, row)) in gen_m.rows.iter().enumerate() {
        require_cols(row, 10, *lineno, "gen")?;
        let bus = as_label(row[0], *lineno)?;
        if row[7] <= 0.0 || isolated.contains(&bus) {
            continue;
        }
        let (c2, c1, c0) = costs.as_ref().map_or((0.0, base_mva, 0.0), |c| c[k]);
        generators.push(GeneratorRecord {
            bus,
            p_min: row[9] / base_mva,
            p_max: row[8] / base_mva,
            q_min: row[4] / base_mva,
            q_max: row[3] / base_mva,
            c2,
            c1,
            c0,
            in_service: true,
        });
    }

    let mut branches = Vec::new();
    for (lineno, row) in &branch_m.rows {
        require_cols(row, 11, *lineno, "branch")?;
        let from_bus = as_label(row[0], *lineno)?;
        let to_bus = as_label(row[1], *lineno)?;
        if row[10] <= 0.0 || isolated.contains(&from_bus) || isolated.contains(&to_bus) {
            continue;
        }
        let (r, x) = (row[2], row[3]);
        let z2 = r * r + x * x;
        if z2 == 0.0 {
            return Err(Error::Validation(format!("branch on line {lineno} has r = x = 0")));
        }
        let (ang_min, ang_max) = match (row.get(11), row.get(12)) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => (0.0, 0.0),
        };
        let (theta_min, theta_max) = angle_bounds(ang_min, ang_max, options);
        if !(theta_min < theta_max) {
            return Err(Error::Validation(format!(
                "branch on line {lineno} has empty angle interval [{ang_min}, {ang_max}]"
            )));
        }
        branches.push(BranchRecord {
            from_bus,
            to_bus,
            series_g: r / z2,
            series_b: -x / z2,
            charging_b: row[4],
            tap_ratio: if row[8] == 0.0 { 1.0 } else { row[8] },
            phase_shift: row[9].to_radians(),
            s_max: (row[5] > 0.0).then(|| row[5] / base_mva),
            theta_min,
            theta_max,
        });
    }

    NetworkCase::new(name, base_mva, buses, generators, branches, loads)
}

fn angle_bounds(lo_deg: f64, hi_deg: f64, options: &ParseOptions) -> (f64, f64) {
    let unbounded = lo_deg == 0.0 && hi_deg == 0.0;
    let pick = |deg: f64, default: f64| {
        if unbounded || deg.abs() >= 360.0 {
            default
        } else {
            deg.to_radians().clamp(-FRAC_PI_2, FRAC_PI_2)
        }
    };
    (
        pick(lo_deg, -options.default_angle_bound),
        pick(hi_deg, options.default_angle_bound),
    )
}

fn parse_costs(m: &Matrix, n_gen: usize, base_mva: f64) -> Result<Vec<(f64, f64, f64)>> {
    if m.rows.len() < n_gen {
        return Err(Error::Parse {
            line: m.rows.last().map_or(0, |r| r.0),
            message: format!("gencost has {} rows for {} generators", m.rows.len(), n_gen),
        });
    }
    m.rows[..n_gen]
        .iter()
        .map(|(lineno, row)| {
            require_cols(row, 4, *lineno, "gencost")?;
            if row[0] as i64 != 2 {
                return Err(Error::Parse {
                    line: *lineno,
                    message: "only polynomial (model 2) costs are supported".into(),
                });
            }
            let n = row[3] as usize;
            if n > 3 {
                return Err(Error::Parse {
                    line: *lineno,
                    message: format!("polynomial cost of degree {} unsupported", n - 1),
                });
            }
            require_cols(row, 4 + n, *lineno, "gencost")?;
            let coeffs = &row[4..4 + n];
            let at = |power: usize| if power < n { coeffs[n - 1 - power] } else { 0.0 };
            Ok((at(2) * base_mva * base_mva, at(1) * base_mva, at(0)))
        })
        .collect()
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(p) => &line[..p],
        None => line,
    }
}

fn parse_numbers(chunk: &str, lineno: usize, out: &mut Vec<f64>) -> Result<()> {
    for token in chunk.split(|c: char| c.is_whitespace() || c == ',') {
        if token.is_empty() || token == "..." {
            continue;
        }
        let value = match token {
            "Inf" | "inf" => f64::INFINITY,
            "-Inf" | "-inf" => f64::NEG_INFINITY,
            _ => token.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid number '{token}'"),
            })?,
        };
        out.push(value);
    }
    Ok(())
}

fn require_cols(row: &[f64], n: usize, lineno: usize, what: &str) -> Result<()> {
    if row.len() < n {
        return Err(Error::Parse {
            line: lineno,
            message: format!("{what} row has {} columns, expected at least {n}", row.len()),
        });
    }
    Ok(())
}

fn as_label(v: f64, lineno: usize) -> Result<usize> {
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Parse { line: lineno, message: format!("invalid bus label {v}") });
    }
    Ok(v as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;
\t2\t1\t50\t20\t0\t10\t1\t1\t0\t230\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t100\t-100\t1\t100\t1\t200\t0;
];
mpc.gencost = [
\t2\t0\t0\t3\t0.11\t5\t0;
];
mpc.branch = [
\t1\t2\t0\t0.1\t0.02\t250\t250\t250\t0\t0\t1\t-30\t30;
\t1\t2\t0.01\t0.1\t0\t250\t250\t250\t0\t0\t0\t-30\t30;
];
";

    #[test]
    fn parses_tiny_case() {
        let case = parse_matpower_case(TWO_BUS).unwrap();
        assert_eq!(case.name, "tiny");
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1, "out-of-service branch dropped");
        let br = &case.branches[0];
        assert_eq!(br.series_g, 0.0);
        assert!((br.series_b + 10.0).abs() < 1e-12);
        assert_eq!(br.s_max, Some(2.5));
        assert!((br.theta_max - 30f64.to_radians()).abs() < 1e-15);
        let g = &case.generators[0];
        assert!((g.c2 - 0.11 * 1e4).abs() < 1e-9);
        assert!((g.c1 - 500.0).abs() < 1e-12);
        assert_eq!(case.load(2), (0.5, 0.2));
        assert_eq!(case.buses[1].shunt_b, 0.1);
    }

    #[test]
    fn zero_impedance_is_rejected() {
        let text = TWO_BUS.replace("1\t2\t0\t0.1\t0.02", "1\t2\t0\t0\t0.02");
        assert!(matches!(parse_matpower_case(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = TWO_BUS.replace("\t2\t1\t50\t20", "\t2\t1\tfifty\t20");
        match parse_matpower_case(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_gencost_defaults_to_linear() {
        let start = TWO_BUS.find("mpc.gencost").unwrap();
        let end = TWO_BUS[start..].find("];").unwrap() + start + 2;
        let text = format!("{}{}", &TWO_BUS[..start], &TWO_BUS[end..]);
        let case = parse_matpower_case(&text).unwrap();
        let g = &case.generators[0];
        assert_eq!((g.c2, g.c1, g.c0), (0.0, 100.0, 0.0));
    }

    #[test]
    fn unbounded_angles_use_default() {
        let text = TWO_BUS.replace("1\t-30\t30;\n\t1\t2\t0.01", "1\t0\t0;\n\t1\t2\t0.01");
        let case = parse_matpower_case(&text).unwrap();
        assert!((case.branches[0].theta_min + 85f64.to_radians()).abs() < 1e-15);
        let text = TWO_BUS.replace("1\t-30\t30;\n\t1\t2\t0.01", "1\t-360\t360;\n\t1\t2\t0.01");
        let case = parse_matpower_case(&text).unwrap();
        assert!((case.branches[0].theta_max - 85f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn missing_reference_is_rejected() {
        let text = TWO_BUS.replace("\t1\t3\t0", "\t1\t2\t0");
        assert!(matches!(parse_matpower_case(&text), Err(Error::Validation(_))));
    }
}
