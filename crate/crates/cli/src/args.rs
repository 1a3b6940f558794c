//! Per-command parameters. Every parameter can come from a flag or from the
//! TOML file given with `--config`; flags win. Resolved parameters, defaults
//! included, are echoed into the report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use prodset::sets::SetSpec;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "prodset", version, about = "Exact finite experiments on product sets in amenable groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML file with parameters for the command; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the sets of a Følner family.
    FolnerGen(Wrapped<FolnerGenArgs>),
    /// Exact Følner defects of a family under a set of generators.
    FolnerCheck(Wrapped<FolnerCheckArgs>),
    /// Square-absolute-continuity certificate for the nilpotent square family.
    SacCert(Wrapped<SacCertArgs>),
    /// Density of a set along a box family.
    Density(Wrapped<DensityArgs>),
    /// Thin a box family so that its sets avoid given axis values.
    Thin(Wrapped<ThinArgs>),
    /// Search for a shifted product-set witness.
    Search(Wrapped<SearchArgs>),
    /// Re-verify a witness read from a JSON file.
    VerifyWitness(Wrapped<VerifyWitnessArgs>),
    /// Certify a finite slice of a Heisenberg scale-set counterexample.
    Counterexample(Wrapped<CounterexampleArgs>),
    /// Extract a witness through the symbolic shift system.
    Extract(Wrapped<ExtractArgs>),
}

#[derive(Args, Debug)]
pub struct Wrapped<T: Args> {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub params: T,
}

/// Parameters that can be merged with a file and filled with defaults.
pub trait Params: Sized + Default + Serialize + for<'de> Deserialize<'de> {
    /// `self` where set, `file` elsewhere.
    fn merged(self, file: Self) -> Self;
    /// Defaults filled in.
    fn resolved(self) -> Self;
}

macro_rules! params {
    (
        $(#[$sm:meta])*
        pub struct $name:ident {
            $(
                $(#[$fm:meta])*
                pub $field:ident : $ty:ty = $default:expr
            ),* $(,)?
        }
    ) => {
        $(#[$sm])*
        #[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
        #[serde(rename_all = "kebab-case", deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl Params for $name {
            fn merged(self, file: Self) -> Self {
                $name { $( $field: self.$field.or(file.$field), )* }
            }

            #[allow(clippy::redundant_closure_call)]
            fn resolved(self) -> Self {
                $name { $( $field: self.$field.or_else(|| $default), )* }
            }
        }
    };
}

fn parse_set(s: &str) -> Result<SetSpec, String> {
    serde_json::from_str(s).map_err(|e| format!("not a set spec: {e}"))
}

params! {
    pub struct FolnerGenArgs {
        /// Group: lattice:D (or zD), h3, ut:N or fv:P:N.
        #[arg(long)]
        pub group: String = Some("lattice:1".into()),
        /// box or nilpotent.
        #[arg(long)]
        pub family: String = Some("box".into()),
        /// Box side at index N is factor * N.
        #[arg(long)]
        pub factor: u64 = Some(1),
        /// one-to or centered.
        #[arg(long)]
        pub convention: String = Some("centered".into()),
        /// Indices, e.g. 1..4 or 1,3,5.
        #[arg(long)]
        pub n: String = Some("1..4".into()),
        /// List the elements of every set.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        pub elements: bool = Some(false),
        /// Refuse to list sets larger than this.
        #[arg(long)]
        pub budget: u64 = Some(1_000_000),
    }
}

params! {
    pub struct FolnerCheckArgs {
        #[arg(long)]
        pub group: String = Some("lattice:1".into()),
        #[arg(long)]
        pub family: String = Some("box".into()),
        #[arg(long)]
        pub factor: u64 = Some(1),
        #[arg(long)]
        pub convention: String = Some("centered".into()),
        #[arg(long)]
        pub n: String = Some("1..4".into()),
        /// left or right.
        #[arg(long)]
        pub side: String = Some("left".into()),
        /// Test elements as a JSON list of coordinate lists; the coordinate
        /// basis when absent.
        #[arg(long)]
        pub generators: String = None,
        #[arg(long)]
        pub budget: u64 = Some(prodset::DEFAULT_BUDGET),
    }
}

params! {
    pub struct SacCertArgs {
        #[arg(long)]
        pub group: String = Some("h3".into()),
        /// Indices checked exhaustively.
        #[arg(long)]
        pub n: String = Some("1..4".into()),
        /// square or identity.
        #[arg(long)]
        pub map: String = Some("square".into()),
        /// Fiber bound M.
        #[arg(long)]
        pub m: u64 = Some(1),
        /// Ratio bound as a fraction such as 1/36; the family's η when absent.
        #[arg(long)]
        pub eta: String = None,
        /// Indices checked by random sampling.
        #[arg(long)]
        pub sample_n: String = None,
        #[arg(long)]
        pub samples: u64 = Some(100_000),
        #[arg(long)]
        pub seed: u64 = Some(0),
        #[arg(long)]
        pub budget: u64 = Some(prodset::DEFAULT_BUDGET),
    }
}

params! {
    pub struct DensityArgs {
        #[arg(long)]
        pub group: String = Some("lattice:2".into()),
        /// Set spec as JSON, e.g. {"type":"congruence","moduli":[2,1],"residues":[0,0]}.
        #[arg(long, value_parser = parse_set)]
        pub set: SetSpec = None,
        #[arg(long)]
        pub factor: u64 = Some(1),
        #[arg(long)]
        pub convention: String = Some("centered".into()),
        #[arg(long)]
        pub n: String = Some("1..10".into()),
    }
}

params! {
    pub struct ThinArgs {
        #[arg(long)]
        pub group: String = Some("lattice:2".into()),
        #[arg(long)]
        pub factor: u64 = Some(1),
        #[arg(long)]
        pub convention: String = Some("centered".into()),
        /// Axes processed in order, e.g. 0,1.
        #[arg(long)]
        pub axes: String = Some("0".into()),
        /// auto, sqrt or a comma separated table such as 1,2,4,8.
        #[arg(long)]
        pub q: String = Some("auto".into()),
        /// Axis values to avoid, e.g. 0..9.
        #[arg(long)]
        pub enforced: String = Some(String::new()),
        #[arg(long)]
        pub steps: usize = Some(4),
        #[arg(long)]
        pub max_index: u32 = Some(2000),
    }
}

params! {
    pub struct SearchArgs {
        #[arg(long)]
        pub group: String = Some("lattice:1".into()),
        #[arg(long, value_parser = parse_set)]
        pub set: SetSpec = None,
        #[arg(long)]
        pub k: usize = Some(4),
        /// Candidates for B: the ball of this radius.
        #[arg(long)]
        pub candidate_radius: u64 = Some(10),
        /// Shifts t: the ball of this radius.
        #[arg(long)]
        pub t_radius: u64 = Some(0),
        /// left-shift or right-shift.
        #[arg(long)]
        pub side: String = Some("left-shift".into()),
        /// increasing, decreasing or both.
        #[arg(long)]
        pub order: String = Some("increasing".into()),
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        pub require_b_in_a: bool = Some(false),
        #[arg(long)]
        pub chunk: usize = Some(16),
        #[arg(long)]
        pub node_budget: u64 = Some(50_000_000),
    }
}

params! {
    pub struct VerifyWitnessArgs {
        /// JSON file holding the witness.
        #[arg(long)]
        pub witness: PathBuf = None,
        #[arg(long, value_parser = parse_set)]
        pub set: SetSpec = None,
    }
}

params! {
    pub struct CounterexampleArgs {
        /// odd-scales, full-scales or conjugated.
        #[arg(long, value_parser = parse_which)]
        pub which: String = None,
        /// Scales of b, odd-scales only.
        #[arg(long = "N")]
        #[serde(rename = "N")]
        pub n_scales: String = Some("3,5".into()),
        /// Scales of c.
        #[arg(long = "M")]
        #[serde(rename = "M")]
        pub m_scales: String = Some("9..12".into()),
        #[arg(long)]
        pub tbound: i64 = Some(9),
        /// Lower corner of the b window, full-scales and conjugated only.
        #[arg(long, allow_hyphen_values = true)]
        pub b_lo: i64 = Some(-3),
        /// Upper corner of the b window.
        #[arg(long, allow_hyphen_values = true)]
        pub b_hi: i64 = Some(4),
        /// Also check the parity filter against unfiltered enumeration on the
        /// smallest scales with shifts bounded by 3.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        pub validate_parity: bool = Some(false),
    }
}

fn parse_which(s: &str) -> Result<String, String> {
    match s {
        "odd-scales" | "61" => Ok("odd-scales".into()),
        "full-scales" | "62" => Ok("full-scales".into()),
        "conjugated" | "63" => Ok("conjugated".into()),
        _ => Err(format!("unknown slice `{s}`; expected odd-scales, full-scales or conjugated")),
    }
}

params! {
    pub struct ExtractArgs {
        #[arg(long)]
        pub group: String = Some("lattice:1".into()),
        #[arg(long, value_parser = parse_set)]
        pub set: SetSpec = None,
        #[arg(long)]
        pub k: usize = Some(8),
        #[arg(long)]
        pub t_radius: u64 = Some(4),
        #[arg(long)]
        pub s_radius: u64 = Some(4),
        /// Radius of the window on which approach conditions are tested.
        #[arg(long)]
        pub window_radius: u64 = Some(6),
        /// Radius of the domain searched for approaching elements.
        #[arg(long)]
        pub domain_radius: u64 = Some(60),
    }
}

/// Inclusive index lists: `a..b`, `a` or comma separated mixtures.
pub fn parse_list(field: &str, s: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("invalid value for `{field}`: `{s}`"))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if b < a {
                    return Err(format!("invalid value for `{field}`: empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

pub fn parse_u32_list(field: &str, s: &str) -> Result<Vec<u32>, String> {
    parse_list(field, s)?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| format!("invalid value for `{field}`: {v} is negative")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("n", "1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_list("n", "3,5").unwrap(), vec![3, 5]);
        assert_eq!(parse_list("n", "-2..=0, 7").unwrap(), vec![-2, -1, 0, 7]);
        assert_eq!(parse_list("n", "").unwrap(), Vec::<i64>::new());
        assert!(parse_list("n", "4..1").unwrap_err().contains("`n`"));
        assert!(parse_u32_list("M", "-1").is_err());
    }

    #[test]
    fn merge_prefers_flags() {
        let flags = SacCertArgs {
            m: Some(2),
            ..Default::default()
        };
        let file: SacCertArgs = toml::from_str("m = 5\nn = \"1..2\"\n").unwrap();
        let r = flags.merged(file).resolved();
        assert_eq!(r.m, Some(2));
        assert_eq!(r.n.as_deref(), Some("1..2"));
        assert_eq!(r.map.as_deref(), Some("square"));
        let back: SacCertArgs = serde_json::from_value(serde_json::to_value(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(toml::from_str::<SacCertArgs>("bogus = 1").is_err());
    }
}
