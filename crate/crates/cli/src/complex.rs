//! Text forms of complex numbers, weight vectors and modulus paths.

use isl_core::flow::TauPath;
use isl_core::lame::Weights;
use isl_core::C64;

/// Parse `re`, `imj`, `re+imj` or `re-imj` (`i` is accepted in place of `j`).
pub fn parse_complex(text: &str) -> Result<C64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex number".into());
    }
    let bad = || format!("cannot parse complex number {text:?}");
    let Some(body) = s.strip_suffix(['j', 'i']) else {
        return s
            .parse::<f64>()
            .map(|re| C64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // Split before the last sign that is not a leading sign or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, imag(&body[k..])?))
        }
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// `re+imj` with the shortest round-trip decimal forms.
pub fn format_complex(z: C64) -> String {
    if z.im.is_sign_negative() && !z.im.is_nan() {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

/// Four comma-separated complex weights `n0,n1,n2,n3`.
pub fn parse_weights(text: &str) -> Result<Weights, String> {
    let parts: Vec<C64> = text
        .split(',')
        .map(parse_complex)
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<C64>| format!("expected 4 weights, found {}", v.len()))
}

/// Colon-separated vertices such as `1.0i:0.1+1.2i:1.5i`.
pub fn parse_tau_path(text: &str) -> Result<TauPath, String> {
    let vertices: Vec<C64> = text
        .split(':')
        .map(parse_complex)
        .collect::<Result<_, _>>()?;
    if vertices.len() < 2 {
        return Err("a tau path needs at least two vertices".into());
    }
    TauPath::new(vertices).map_err(|e| e.to_string())
}

pub fn format_tau_path(path: &TauPath) -> String {
    path.vertices()
        .iter()
        .map(|&v| format_complex(v))
        .collect::<Vec<_>>()
        .join(":")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_usual_forms() {
        let cases = [
            ("0.3", C64::new(0.3, 0.0)),
            ("2i", C64::new(0.0, 2.0)),
            ("1.0i", C64::new(0.0, 1.0)),
            ("-j", C64::new(0.0, -1.0)),
            ("0.1+1.2j", C64::new(0.1, 1.2)),
            ("-0.5-0.25i", C64::new(-0.5, -0.25)),
            ("1e-3+2.5e-2j", C64::new(1e-3, 2.5e-2)),
            ("1e+1-1e-1j", C64::new(10.0, -0.1)),
            (" 0.2 + 0.3j ", C64::new(0.2, 0.3)),
        ];
        for (text, want) in cases {
            assert_eq!(parse_complex(text).unwrap(), want, "{text}");
        }
        for bad in ["", "abc", "1+2", "1+xj"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formatting_round_trips() {
        for z in [
            C64::new(0.1, -0.2),
            C64::new(-3.5e-9, 1e10),
            C64::new(0.0, 0.0),
        ] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
        assert_eq!(format_complex(C64::new(1.0, -2.0)), "1-2j");
    }

    #[test]
    fn weights_and_paths() {
        let w = parse_weights("1,0,0.2,0.3i").unwrap();
        assert_eq!(w[3], C64::new(0.0, 0.3));
        assert!(parse_weights("1,0").is_err());
        let p = parse_tau_path("1.0i:0.1+1.2i:1.5i").unwrap();
        assert_eq!(p.vertices().len(), 3);
        assert!(parse_tau_path("1.0i").is_err());
        assert!(parse_tau_path("1.0i:-1.0i").is_err());
    }
}
