//! File access and argument parsing helpers.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use kbound::frame::DomainGrid;
use kbound::laurent::{c, C64};
use kbound::potentials::PotentialFile;

use crate::error::{CliError, CliResult};

pub fn read_to_string(p: &Path) -> CliResult<String> {
    std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

pub fn write_file(p: &Path, body: &[u8]) -> CliResult<()> {
    std::fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

pub fn read_potential_file(p: &Path) -> CliResult<PotentialFile> {
    Ok(serde_json::from_str(&read_to_string(p)?)?)
}

/// Seed for a named consumer: the first word of ChaCha20 stream `hash(label)` keyed by `seed`.
/// Distinct labels get independent streams, so adding a consumer never shifts the others.
pub fn child_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    let h = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(h);
    r.next_u64()
}

/// "64x64" → (64, 64).
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected NXxNY")?;
    let nx = a.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let ny = b.trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok((nx, ny))
}

/// "x0,x1,y0,y1".
pub fn parse_domain(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 4]>::try_from(v).map_err(|_| "expected x0,x1,y0,y1".to_string())
}

/// "re" or "re,im".
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [re] => Ok(c(re, 0.0)),
        [re, im] => Ok(c(re, im)),
        _ => Err("expected re or re,im".into()),
    }
}

/// "" (empty), "3", "1,2,5" or "1..8" (inclusive).
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string())).collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string())).collect()
}

pub fn domain_grid(grid: (usize, usize), dom: [f64; 4]) -> CliResult<DomainGrid> {
    Ok(DomainGrid::new((dom[0], dom[1]), (dom[2], dom[3]), grid.0, grid.1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_grid("64x32"), Ok((64, 32)));
        assert!(parse_grid("64").is_err());
        assert_eq!(parse_domain("-1,1,-0.5,2"), Ok([-1.0, 1.0, -0.5, 2.0]));
        assert!(parse_domain("1,2,3").is_err());
        assert_eq!(parse_complex("1.0"), Ok(c(1.0, 0.0)));
        assert_eq!(parse_complex("0,1"), Ok(c(0.0, 1.0)));
        assert_eq!(parse_usize_list("1..4"), Ok(vec![1, 2, 3, 4]));
        assert_eq!(parse_usize_list("2, 5"), Ok(vec![2, 5]));
        assert_eq!(parse_usize_list(""), Ok(vec![]));
        assert_eq!(parse_f64_list("0.5,-1"), Ok(vec![0.5, -1.0]));
    }

    #[test]
    fn child_seeds_are_stable_and_distinct() {
        assert_eq!(child_seed(7, "a"), child_seed(7, "a"));
        assert_ne!(child_seed(7, "a"), child_seed(7, "b"));
        assert_ne!(child_seed(7, "a"), child_seed(8, "a"));
    }
}
