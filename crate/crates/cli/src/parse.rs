//! Parsing of angles, angle grids and integer ranges given on the command line.

use std::f64::consts::PI;

/// Smallest angle accepted after clamping.
pub const THETA_MIN: f64 = 1e-6;

/// Angle in radians from `1.2`, `pi`, `0.5pi`, `-pi`, `3pi/4` or `pi/2`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (
            a.trim(),
            b.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad denominator in angle '{s}'"))?,
        ),
        None => (t.as_str(), 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c
                    .parse::<f64>()
                    .map_err(|_| format!("bad coefficient in angle '{s}'"))?,
            };
            c * PI
        }
        None => num
            .parse::<f64>()
            .map_err(|_| format!("cannot read angle '{s}'"))?,
    };
    let value = value / den;
    if !value.is_finite() {
        return Err(format!("angle '{s}' is not finite"));
    }
    Ok(value)
}

/// Clamp to `[THETA_MIN, pi]`, recording a warning when the value moves.
pub fn clamp_theta(theta: f64, warnings: &mut Vec<String>) -> f64 {
    let c = theta.clamp(THETA_MIN, PI);
    if c != theta {
        let msg = format!("theta = {theta} clamped to {c}");
        eprintln!("warning: {msg}");
        warnings.push(msg);
    }
    c
}

/// Angles from `a..b` (inclusive, `points` values), a comma list or one value.
pub fn parse_angle_grid(s: &str, points: usize) -> Result<Vec<f64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_angle(a)?, parse_angle(b)?);
        return Ok(match points {
            0 => return Err("an angle range needs at least one point".into()),
            1 => vec![a],
            p => (0..p)
                .map(|k| a + (b - a) * k as f64 / (p - 1) as f64)
                .collect(),
        });
    }
    s.split(',').map(parse_angle).collect()
}

/// Integers from `a..b` (inclusive), a comma list or one value.
pub fn parse_int_range(s: &str) -> Result<Vec<usize>, String> {
    let int = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| format!("cannot read integer '{x}'"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (int(a)?, int(b)?);
        if a > b {
            return Err(format!("empty range '{s}'"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(int).collect()
}

/// 1-based site list such as `1,8`; empty for the vacuum.
pub fn parse_sites(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("cannot read site '{x}'"))
        })
        .collect()
}
