//! File formats: JSON games and strategies, fixed-precision CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::Game;
use crate::linalg::{CMatrix, C64};
use crate::strategies::EntangledStrategy;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sizes {
    nx: usize,
    ny: usize,
    na: usize,
    nb: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    sizes: Sizes,
    /// `mu[x][y]`.
    mu: Vec<Vec<f64>>,
    /// Winning `[x, y, a, b]` tuples; everything else loses.
    predicate: Vec<[usize; 4]>,
}

/// Names accepted in place of a game file path.
pub const BUILTIN_GAMES: &[&str] = &["chsh"];

pub fn parse_game(text: &str) -> Result<Game> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("game file: {e}")))?;
    let Sizes { nx, ny, na, nb } = file.sizes;
    if file.mu.len() != nx || file.mu.iter().any(|row| row.len() != ny) {
        return Err(Error::Parse(format!("game file: field `mu` must be a {nx}×{ny} array")));
    }
    let mut predicate = vec![false; nx * ny * na * nb];
    for (i, &[x, y, a, b]) in file.predicate.iter().enumerate() {
        if x >= nx || y >= ny || a >= na || b >= nb {
            return Err(Error::Parse(format!("game file: predicate entry {i} ({x}, {y}, {a}, {b}) is out of range")));
        }
        predicate[((x * ny + y) * na + a) * nb + b] = true;
    }
    Game::new(nx, ny, na, nb, file.mu.concat(), predicate).map_err(|e| Error::Parse(format!("game file: {e}")))
}

pub fn game_to_json(game: &Game) -> String {
    let (nx, ny, na, nb) = game.sizes();
    let file = GameFile {
        sizes: Sizes { nx, ny, na, nb },
        mu: (0..nx).map(|x| (0..ny).map(|y| game.mu(x, y)).collect()).collect(),
        predicate: game.winning_tuples(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

/// A built-in name or a path to a game file.
pub fn load_game(spec: &str) -> Result<Game> {
    match spec {
        "chsh" => Ok(Game::chsh()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
            parse_game(&text)
        }
    }
}

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyFile {
    da: usize,
    db: usize,
    /// `[re, im]` pairs indexed `i·db + j`.
    shared: Vec<[f64; 2]>,
    /// `alice[x][a]` as row-major `[re, im]` matrices.
    alice: Vec<Vec<JsonMatrix>>,
    bob: Vec<Vec<JsonMatrix>>,
}

fn to_json_matrix(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

fn from_json_matrix(m: &JsonMatrix, dim: usize, what: &str) -> Result<CMatrix> {
    if m.len() != dim || m.iter().any(|row| row.len() != dim) {
        return Err(Error::Parse(format!("strategy file: {what} must be {dim}×{dim}")));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| C64::new(m[r][c][0], m[r][c][1])))
}

pub fn parse_strategy(text: &str) -> Result<EntangledStrategy> {
    let f: StrategyFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("strategy file: {e}")))?;
    let family = |fam: &[Vec<JsonMatrix>], dim: usize, who: &str| -> Result<Vec<Vec<CMatrix>>> {
        fam.iter()
            .enumerate()
            .map(|(q, povm)| {
                povm.iter().enumerate().map(|(o, m)| from_json_matrix(m, dim, &format!("{who}[{q}][{o}]"))).collect()
            })
            .collect()
    };
    let alice = family(&f.alice, f.da, "alice")?;
    let bob = family(&f.bob, f.db, "bob")?;
    let shared = f.shared.iter().map(|p| C64::new(p[0], p[1])).collect();
    EntangledStrategy::new(f.da, f.db, shared, alice, bob)
}

pub fn strategy_to_json(s: &EntangledStrategy) -> String {
    let family = |fam: &[Vec<CMatrix>]| fam.iter().map(|povm| povm.iter().map(to_json_matrix).collect()).collect();
    let file = StrategyFile {
        da: s.da(),
        db: s.db(),
        shared: s.shared().iter().map(|z| [z.re, z.im]).collect(),
        alice: family(s.alice()),
        bob: family(s.bob()),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

pub fn load_strategy(path: &Path) -> Result<EntangledStrategy> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_strategy(&text)
}

/// Fixed 12-decimal rendering; magnitudes below the last digit print as zero
/// so that `-0` and round-off never differ between runs.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v.abs() < 5e-13 {
        "0.000000000000".into()
    } else {
        format!("{v:.12}")
    }
}

/// Header plus rows, comma separated, LF line endings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
