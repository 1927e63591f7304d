//! Gene-length tables: per-kingdom regression of total coding length on
//! gene count, a per-species uniformity check, and synthetic generators.
//!
//! With a fixed four-letter alphabet every gene has the same per-token
//! cost, so the ensemble predicts one average gene length per kingdom and
//! total length linear in gene count.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::{
    assemble, build_ccdf, ols, predicted_shape_check, FitError, LinearFit, Measure, Moments, ShapeReport,
};
use crate::ensemble::{metropolis_sample, EnsembleError, EnsembleSystem, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kingdom {
    Prokaryote,
    Eukaryote,
    Other,
}

impl std::str::FromStr for Kingdom {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prokaryote" => Ok(Kingdom::Prokaryote),
            "eukaryote" => Ok(Kingdom::Eukaryote),
            "other" => Ok(Kingdom::Other),
            _ => Err(format!(
                "unknown kingdom `{s}` (expected prokaryote, eukaryote or other)"
            )),
        }
    }
}

impl std::fmt::Display for Kingdom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kingdom::Prokaryote => "prokaryote",
            Kingdom::Eukaryote => "eukaryote",
            Kingdom::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneSet {
    pub species: String,
    pub kingdom: Kingdom,
    /// Gene lengths in bases; non-empty, each at least 1.
    pub lengths: Vec<u64>,
}

impl GeneSet {
    /// Gene count `M_s`.
    pub fn genes(&self) -> u64 {
        self.lengths.len() as u64
    }

    /// Total coding length `T_s`.
    pub fn total_length(&self) -> u64 {
        self.lengths.iter().sum()
    }

    pub fn mean_length(&self) -> f64 {
        self.total_length() as f64 / self.genes() as f64
    }
}

#[derive(Debug, Error)]
pub enum GenomeError {
    #[error("gene table: {0}")]
    Io(#[from] std::io::Error),
    #[error("gene table: {0}")]
    Csv(#[from] csv::Error),
    #[error("gene table line {line}: {message}")]
    BadRow { line: u64, message: String },
    #[error("gene table header must be `species,kingdom,length` or `species,kingdom,lengths`")]
    BadHeader,
    #[error("gene table has no rows")]
    Empty,
    #[error("kingdom {kingdom} has {found} species; at least 3 are needed")]
    TooFewSpecies { kingdom: Kingdom, found: usize },
    #[error("every species in kingdom {0} has the same gene count; regression is degenerate")]
    DegenerateRegression(Kingdom),
    #[error("species {species} has {found} genes; at least {needed} are needed")]
    TooFewGenes {
        species: String,
        found: usize,
        needed: usize,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("generator: {0}")]
    Generator(String),
}

/// Reads a gene table, one gene per row (`species,kingdom,length`) or one
/// species per row (`species,kingdom,lengths` with `;`-separated values).
/// Species keep their order of first appearance.
pub fn read_gene_lengths<R: Read>(input: R) -> Result<Vec<GeneSet>, GenomeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_ascii_lowercase).collect();
    let compact = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["species", "kingdom", "length"] => false,
        ["species", "kingdom", "lengths"] => true,
        _ => return Err(GenomeError::BadHeader),
    };

    let mut sets: Vec<GeneSet> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| GenomeError::BadRow { line, message };
        let species = row[0].to_string();
        if species.is_empty() {
            return Err(bad("empty species name".into()));
        }
        let kingdom: Kingdom = row[1].parse().map_err(bad)?;
        let mut lengths = Vec::new();
        let field = &row[2];
        let parts: Vec<&str> = if compact {
            field.split(';').collect()
        } else {
            vec![field]
        };
        for part in parts {
            let part = part.trim();
            let v: i128 = part
                .parse()
                .map_err(|_| bad(format!("length `{part}` is not an integer")))?;
            if v <= 0 {
                return Err(bad(format!("length {v} must be at least 1")));
            }
            lengths.push(u64::try_from(v).map_err(|_| bad(format!("length {v} is too large")))?);
        }
        match index.get(&species) {
            Some(&i) => {
                if sets[i].kingdom != kingdom {
                    return Err(bad(format!(
                        "species {species} was listed as {} before, now {kingdom}",
                        sets[i].kingdom
                    )));
                }
                sets[i].lengths.extend(lengths);
            }
            None => {
                index.insert(species.clone(), sets.len());
                sets.push(GeneSet {
                    species,
                    kingdom,
                    lengths,
                });
            }
        }
    }
    if sets.is_empty() {
        return Err(GenomeError::Empty);
    }
    Ok(sets)
}

pub fn load_gene_lengths(path: &Path) -> Result<Vec<GeneSet>, GenomeError> {
    read_gene_lengths(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Writes one gene per row.
pub fn write_gene_lengths<W: std::io::Write>(out: W, sets: &[GeneSet]) -> Result<(), GenomeError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["species", "kingdom", "length"])?;
    for set in sets {
        for len in &set.lengths {
            w.write_record([set.species.as_str(), &set.kingdom.to_string(), &len.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingdomRegression {
    pub kingdom: Kingdom,
    pub species: usize,
    /// Least squares of `T_s` on `M_s` across species.
    pub fit: LinearFit,
    /// `Σ T_s / Σ M_s`.
    pub mean_length: f64,
    /// `fit.slope`.
    pub k_prime: f64,
    /// Range of per-species mean gene length.
    pub species_mean_range: (f64, f64),
}

pub const MIN_SPECIES: usize = 3;

/// Regresses total coding length on gene count over the species of one
/// kingdom. Sums are exact in integer arithmetic, so data lying exactly on
/// a line give the exact slope and `r_squared = 1`.
pub fn kingdom_regression(sets: &[GeneSet], kingdom: Kingdom) -> Result<KingdomRegression, GenomeError> {
    let members: Vec<&GeneSet> = sets.iter().filter(|s| s.kingdom == kingdom).collect();
    if members.len() < MIN_SPECIES {
        return Err(GenomeError::TooFewSpecies {
            kingdom,
            found: members.len(),
        });
    }
    let m: Vec<u64> = members.iter().map(|s| s.genes()).collect();
    let t: Vec<u64> = members.iter().map(|s| s.total_length()).collect();
    if m.iter().all(|&v| v == m[0]) {
        return Err(GenomeError::DegenerateRegression(kingdom));
    }
    let fit = match exact_fit(&m, &t) {
        Some(f) => f,
        None => {
            let x: Vec<f64> = m.iter().map(|&v| v as f64).collect();
            let y: Vec<f64> = t.iter().map(|&v| v as f64).collect();
            ols(&x, &y)?
        }
    };
    let total_genes: u64 = m.iter().sum();
    let total_length: u64 = t.iter().sum();
    let means = members.iter().map(|s| s.mean_length());
    let species_mean_range = means.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(KingdomRegression {
        kingdom,
        species: members.len(),
        k_prime: fit.slope,
        mean_length: total_length as f64 / total_genes as f64,
        fit,
        species_mean_range,
    })
}

/// Least squares from exact integer moments; `None` on overflow or when the
/// response is constant.
fn exact_fit(x: &[u64], y: &[u64]) -> Option<LinearFit> {
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&xi, &yi) in x.iter().zip(y) {
        let (xi, yi) = (xi as i128, yi as i128);
        sx = sx.checked_add(xi)?;
        sy = sy.checked_add(yi)?;
        sxx = sxx.checked_add(xi.checked_mul(xi)?)?;
        sxy = sxy.checked_add(xi.checked_mul(yi)?)?;
        syy = syy.checked_add(yi.checked_mul(yi)?)?;
    }
    // n² times the centered sums.
    let cxx = n.checked_mul(sxx)?.checked_sub(sx.checked_mul(sx)?)?;
    let cxy = n.checked_mul(sxy)?.checked_sub(sx.checked_mul(sy)?)?;
    let cyy = n.checked_mul(syy)?.checked_sub(sy.checked_mul(sy)?)?;
    if cxx <= 0 || cyy <= 0 {
        return None;
    }
    let ssr_num = cyy.checked_mul(cxx)?.checked_sub(cxy.checked_mul(cxy)?)?;
    let intercept_num = sy.checked_mul(cxx)?.checked_sub(sx.checked_mul(cxy)?)?;
    let n_cxx = n.checked_mul(cxx)?;
    let nf = n as f64;
    Some(assemble(Moments {
        n: x.len(),
        slope: ratio(cxy, cxx),
        intercept: ratio(intercept_num, n_cxx),
        ssr: ratio(ssr_num, n_cxx).max(0.0),
        sxx: cxx as f64 / nf,
        syy: cyy as f64 / nf,
        mean_x: ratio(sx, n),
        range: (*x.iter().min()? as f64, *x.iter().max()? as f64),
    }))
}

/// `num / den`, exact whenever the quotient is an integer.
fn ratio(num: i128, den: i128) -> f64 {
    if num % den == 0 {
        (num / den) as f64
    } else {
        num as f64 / den as f64
    }
}

pub const MIN_UNIFORMITY_GENES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub species: String,
    pub genes: usize,
    pub mean: f64,
    /// Population standard deviation over the mean.
    pub cv: f64,
    pub shape: Option<ShapeReport>,
    /// The length CCDF has a power-law tail.
    pub power_law_tail: bool,
    /// `power-law tail`, `no power-law tail`, or why no shape was fitted.
    pub ccdf_tail_slope_flag: String,
}

/// Checks a species' gene lengths for the absence of a power-law tail.
pub fn uniformity_check(set: &GeneSet) -> Result<UniformityReport, GenomeError> {
    let n = set.lengths.len();
    if n < MIN_UNIFORMITY_GENES {
        return Err(GenomeError::TooFewGenes {
            species: set.species.clone(),
            found: n,
            needed: MIN_UNIFORMITY_GENES,
        });
    }
    let mean = set.mean_length();
    let var = set.lengths.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n as f64;
    let cv = var.sqrt() / mean;
    let ccdf = build_ccdf(&set.lengths, Measure::Tokens)?;
    let (shape, flag) = match predicted_shape_check(&ccdf.points) {
        Ok(r) => {
            let flag = if r.power_law_tail {
                "power-law tail"
            } else {
                "no power-law tail"
            };
            (Some(r), flag.to_string())
        }
        Err(e @ FitError::TooFewDistinctSizes { .. }) => (None, format!("no power-law tail ({e})")),
        Err(e) => return Err(e.into()),
    };
    Ok(UniformityReport {
        species: set.species.clone(),
        genes: n,
        mean,
        cv: if cv.is_finite() { cv } else { 0.0 },
        power_law_tail: shape.as_ref().is_some_and(|s| s.power_law_tail),
        shape,
        ccdf_tail_slope_flag: flag,
    })
}

/// Gene-length law of a synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthLaw {
    Constant {
        length: u64,
    },
    /// Integers uniform on `[lo, hi]`.
    Uniform {
        lo: u64,
        hi: u64,
    },
    /// Continuous Pareto with CCDF `(x / min)^-alpha`, rounded down.
    Pareto {
        min: u64,
        alpha: f64,
    },
}

impl LengthLaw {
    /// Expected length, ignoring rounding for the Pareto law.
    pub fn mean(&self) -> f64 {
        match *self {
            LengthLaw::Constant { length } => length as f64,
            LengthLaw::Uniform { lo, hi } => 0.5 * (lo + hi) as f64,
            LengthLaw::Pareto { min, alpha } if alpha > 1.0 => alpha * min as f64 / (alpha - 1.0),
            LengthLaw::Pareto { .. } => f64::INFINITY,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match *self {
            LengthLaw::Constant { length } => length,
            LengthLaw::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            LengthLaw::Pareto { min, alpha } => {
                let u: f64 = 1.0 - rng.gen::<f64>();
                (min as f64 * u.powf(-1.0 / alpha)).floor() as u64
            }
        }
    }

    fn validate(&self) -> Result<(), GenomeError> {
        let ok = match *self {
            LengthLaw::Constant { length } => length >= 1,
            LengthLaw::Uniform { lo, hi } => lo >= 1 && lo <= hi,
            LengthLaw::Pareto { min, alpha } => min >= 1 && alpha > 0.0 && alpha.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GenomeError::Generator(format!("invalid length law {self:?}")))
        }
    }
}

/// Parameters of a synthetic kingdom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticKingdom {
    pub kingdom: Kingdom,
    pub species: usize,
    /// Gene counts are uniform on this inclusive range.
    pub genes: (u64, u64),
    pub law: LengthLaw,
    /// Species are named `<prefix><index>`.
    pub prefix: String,
}

pub fn synthetic_kingdom(spec: &SyntheticKingdom, seed: u64) -> Result<Vec<GeneSet>, GenomeError> {
    spec.law.validate()?;
    let (lo, hi) = spec.genes;
    if lo == 0 || lo > hi {
        return Err(GenomeError::Generator(format!("invalid gene-count range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = Uniform::new_inclusive(lo, hi);
    Ok((0..spec.species)
        .map(|i| {
            let n = counts.sample(&mut rng);
            GeneSet {
                species: format!("{}{:02}", spec.prefix, i + 1),
                kingdom: spec.kingdom,
                lengths: (0..n).map(|_| spec.law.sample(&mut rng)).collect(),
            }
        })
        .collect())
}

/// Gene sets drawn from the ensemble with every gene on the same
/// four-letter alphabet: one pooled system of `mean_length · Σ M_s` bases
/// over all genes, sampled by Metropolis, whose final microstate is split
/// into consecutive runs of `M_s` genes per species.
pub fn ensemble_gene_sets(
    gene_counts: &[u64],
    mean_length: u64,
    kingdom: Kingdom,
    steps: u64,
    seed: u64,
) -> Result<Vec<GeneSet>, GenomeError> {
    let genes: u64 = gene_counts.iter().sum();
    if genes == 0 || mean_length == 0 {
        return Err(GenomeError::Generator(
            "need at least one gene of positive mean length".into(),
        ));
    }
    let system = EnsembleSystem::from_alphabet_sizes(mean_length * genes, &vec![4; genes as usize], 1.0)?;
    let config = SamplerConfig {
        histograms: false,
        ..SamplerConfig::new(steps, seed)
    };
    let state = metropolis_sample(&system, &config)?.final_state;
    let mut at = 0usize;
    let mut sets = Vec::with_capacity(gene_counts.len());
    for (i, &n) in gene_counts.iter().enumerate() {
        let lengths = state.t[at..at + n as usize].to_vec();
        at += n as usize;
        if lengths.contains(&0) {
            return Err(GenomeError::Generator(
                "sampled an empty gene; raise the mean length".into(),
            ));
        }
        sets.push(GeneSet {
            species: format!("ens{:02}", i + 1),
            kingdom,
            lengths,
        });
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_kingdom(length: u64) -> Vec<GeneSet> {
        [120u64, 450, 800, 2300]
            .iter()
            .enumerate()
            .map(|(i, &n)| GeneSet {
                species: format!("c{i}"),
                kingdom: Kingdom::Prokaryote,
                lengths: vec![length; n as usize],
            })
            .collect()
    }

    #[test]
    fn constant_length_kingdom_is_exact() {
        let r = kingdom_regression(&constant_kingdom(1000), Kingdom::Prokaryote).unwrap();
        assert_eq!(r.fit.slope, 1000.0);
        assert_eq!(r.k_prime, 1000.0);
        assert_eq!(r.fit.intercept, 0.0);
        assert_eq!(r.fit.r_squared, 1.0);
        assert_eq!(r.mean_length, 1000.0);
        assert!(r.fit.p_value.is_below_threshold());
    }

    #[test]
    fn uniform_lengths_recover_generator_mean() {
        let spec = SyntheticKingdom {
            kingdom: Kingdom::Eukaryote,
            species: 40,
            genes: (200, 4000),
            law: LengthLaw::Uniform { lo: 500, hi: 1500 },
            prefix: "u".into(),
        };
        let sets = synthetic_kingdom(&spec, 17).unwrap();
        let r = kingdom_regression(&sets, Kingdom::Eukaryote).unwrap();
        assert!((r.k_prime - 1000.0).abs() < 2.0 * r.fit.slope_stderr, "{:?}", r.fit);
        assert!(r.species_mean_range.0 <= r.mean_length && r.mean_length <= r.species_mean_range.1);
    }

    #[test]
    fn distinct_kingdom_means_separate() {
        let make = |kingdom, lo, hi, seed| {
            synthetic_kingdom(
                &SyntheticKingdom {
                    kingdom,
                    species: 20,
                    genes: (300, 3000),
                    law: LengthLaw::Uniform { lo, hi },
                    prefix: kingdom.to_string(),
                },
                seed,
            )
            .unwrap()
        };
        let mut sets = make(Kingdom::Prokaryote, 400, 1400, 1);
        sets.extend(make(Kingdom::Eukaryote, 800, 2000, 2));
        let p = kingdom_regression(&sets, Kingdom::Prokaryote).unwrap();
        let e = kingdom_regression(&sets, Kingdom::Eukaryote).unwrap();
        let gap = e.k_prime - p.k_prime;
        assert!(gap > 4.0 * (p.fit.slope_stderr + e.fit.slope_stderr), "{p:?} {e:?}");
    }

    #[test]
    fn regression_preconditions() {
        let sets = constant_kingdom(10);
        assert!(matches!(
            kingdom_regression(&sets[..2], Kingdom::Prokaryote),
            Err(GenomeError::TooFewSpecies { found: 2, .. })
        ));
        assert!(matches!(
            kingdom_regression(&sets, Kingdom::Eukaryote),
            Err(GenomeError::TooFewSpecies { found: 0, .. })
        ));
        let same: Vec<GeneSet> = (0..3)
            .map(|i| GeneSet {
                species: i.to_string(),
                kingdom: Kingdom::Other,
                lengths: vec![5 + i; 7],
            })
            .collect();
        assert!(matches!(
            kingdom_regression(&same, Kingdom::Other),
            Err(GenomeError::DegenerateRegression(_))
        ));
    }

    #[test]
    fn parses_both_table_forms() {
        let long = "species,kingdom,length\nE. coli,prokaryote,900\nyeast,eukaryote,1400\nE. coli,prokaryote,1100\n";
        let sets = read_gene_lengths(long.as_bytes()).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].lengths, vec![900, 1100]);
        let compact = "species,kingdom,lengths\na,prokaryote,1;2;3\nb,Eukaryote, 4 ; 5\n";
        let sets = read_gene_lengths(compact.as_bytes()).unwrap();
        assert_eq!(
            (sets[1].kingdom, sets[1].lengths.clone()),
            (Kingdom::Eukaryote, vec![4, 5])
        );

        let mut buf = Vec::new();
        write_gene_lengths(&mut buf, &sets).unwrap();
        assert_eq!(read_gene_lengths(&buf[..]).unwrap(), sets);
    }

    #[test]
    fn rejects_bad_rows() {
        let zero = "species,kingdom,length\na,prokaryote,10\na,prokaryote,0\n";
        match read_gene_lengths(zero.as_bytes()) {
            Err(GenomeError::BadRow { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains('0'));
            }
            other => panic!("{other:?}"),
        }
        let neg = "species,kingdom,lengths\na,prokaryote,5;-2\n";
        assert!(matches!(
            read_gene_lengths(neg.as_bytes()),
            Err(GenomeError::BadRow { line: 2, .. })
        ));
        let kingdom = "species,kingdom,length\na,archaea,5\n";
        assert!(matches!(
            read_gene_lengths(kingdom.as_bytes()),
            Err(GenomeError::BadRow { .. })
        ));
        let switched = "species,kingdom,length\na,prokaryote,5\na,eukaryote,5\n";
        assert!(matches!(
            read_gene_lengths(switched.as_bytes()),
            Err(GenomeError::BadRow { line: 3, .. })
        ));
        assert!(matches!(
            read_gene_lengths("x,y\n1,2\n".as_bytes()),
            Err(GenomeError::BadHeader)
        ));
        assert!(matches!(
            read_gene_lengths("species,kingdom,length\n".as_bytes()),
            Err(GenomeError::Empty)
        ));
    }

    #[test]
    fn uniformity_of_equal_and_power_law_lengths() {
        let equal = GeneSet {
            species: "eq".into(),
            kingdom: Kingdom::Other,
            lengths: vec![700; 50],
        };
        let r = uniformity_check(&equal).unwrap();
        assert_eq!((r.cv, r.mean, r.power_law_tail), (0.0, 700.0, false));

        let spec = SyntheticKingdom {
            kingdom: Kingdom::Other,
            species: 1,
            genes: (3000, 3000),
            law: LengthLaw::Pareto { min: 100, alpha: 1.2 },
            prefix: "p".into(),
        };
        let set = &synthetic_kingdom(&spec, 8).unwrap()[0];
        let r = uniformity_check(set).unwrap();
        assert!(r.power_law_tail, "{r:?}");
        assert_eq!(r.ccdf_tail_slope_flag, "power-law tail");

        let few = GeneSet {
            lengths: vec![1; 29],
            ..equal
        };
        assert!(matches!(
            uniformity_check(&few),
            Err(GenomeError::TooFewGenes { found: 29, .. })
        ));
    }

    #[test]
    fn ensemble_genes_have_no_tail_and_fit_a_line() {
        let counts = [40u64, 90, 150, 220, 300, 410];
        let sets = ensemble_gene_sets(&counts, 500, Kingdom::Prokaryote, 5_000_000, 21).unwrap();
        assert_eq!(sets.iter().map(|s| s.genes()).collect::<Vec<_>>(), counts);
        assert_eq!(sets.iter().map(|s| s.total_length()).sum::<u64>(), 500 * 1210);
        for s in &sets {
            assert!(!uniformity_check(s).unwrap().power_law_tail);
        }
        let r = kingdom_regression(&sets, Kingdom::Prokaryote).unwrap();
        assert!(r.fit.r_squared > 0.95);
    }
}
