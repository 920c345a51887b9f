use std::path::PathBuf;

use clap::{Args, ValueEnum};

use crate::error::{Error, Result};
use crate::hamiltonians::{hubbard_dimer, load_fcidump_path, random_two_body, IntegralSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toy {
    HubbardDimer,
    Random,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// FCIDUMP integral file
    #[arg(long, value_name = "PATH")]
    pub fcidump: Option<PathBuf>,
    /// Built-in model instead of a file
    #[arg(long, value_enum)]
    pub toy: Option<Toy>,
    /// Hubbard hopping (default 1)
    #[arg(long = "t", value_name = "T")]
    pub hop: Option<f64>,
    /// Hubbard on-site repulsion (default 4)
    #[arg(long = "U", value_name = "U")]
    pub onsite: Option<f64>,
    /// Seed of the random model (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spin orbitals of the random model
    #[arg(long)]
    pub norb: Option<usize>,
    /// Electrons of the random model
    #[arg(long)]
    pub nelec: Option<usize>,
    /// Entry bound of the random model (default 1)
    #[arg(long)]
    pub scale: Option<f64>,
}

impl InputArgs {
    /// Loads the integrals and a short description of their source.
    pub fn load(&self) -> Result<(String, IntegralSet)> {
        let hubbard_params = self.hop.is_some() || self.onsite.is_some();
        let random_params = self.seed.is_some() || self.norb.is_some() || self.nelec.is_some() || self.scale.is_some();
        match (&self.fcidump, self.toy) {
            (Some(_), Some(_)) => Err(invalid("give either --fcidump or --toy, not both")),
            (None, None) => Err(invalid("no input: give --fcidump PATH or --toy NAME")),
            (Some(path), None) => {
                if hubbard_params || random_params {
                    return Err(invalid("model parameters are only valid with --toy"));
                }
                Ok((path.display().to_string(), load_fcidump_path(path)?))
            }
            (None, Some(Toy::HubbardDimer)) => {
                if random_params {
                    return Err(invalid("--seed, --norb, --nelec, --scale apply to --toy random only"));
                }
                let (t, u) = (self.hop.unwrap_or(1.0), self.onsite.unwrap_or(4.0));
                Ok((format!("hubbard-dimer:t={t},U={u}"), hubbard_dimer(t, u)?))
            }
            (None, Some(Toy::Random)) => {
                if hubbard_params {
                    return Err(invalid("--t and --U apply to --toy hubbard-dimer only"));
                }
                let norb = self.norb.ok_or_else(|| invalid("--toy random needs --norb"))?;
                let nelec = self.nelec.ok_or_else(|| invalid("--toy random needs --nelec"))?;
                let (seed, scale) = (self.seed.unwrap_or(0), self.scale.unwrap_or(1.0));
                Ok((
                    format!("random:seed={seed},norb={norb},nelec={nelec},scale={scale}"),
                    random_two_body(seed, norb, nelec, scale)?,
                ))
            }
        }
    }
}

fn invalid(msg: &str) -> Error {
    Error::InvalidInput(msg.to_string())
}

/// `LABEL=SOURCE` where `SOURCE` is an FCIDUMP path, `hubbard-dimer:t=..,U=..` or
/// `random:seed=..,norb=..,nelec=..,scale=..`.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub label: String,
    pub source: String,
}

impl std::str::FromStr for Item {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (label, source) = s.split_once('=').ok_or_else(|| format!("expected LABEL=SOURCE, got '{s}'"))?;
        if label.is_empty() || source.is_empty() {
            return Err(format!("expected LABEL=SOURCE, got '{s}'"));
        }
        if label.contains(',') || label.contains('"') {
            return Err(format!("label '{label}' may not contain commas or quotes"));
        }
        Ok(Item { label: label.to_string(), source: source.to_string() })
    }
}

impl Item {
    pub fn input(&self) -> Result<InputArgs> {
        let (kind, params) = match self.source.split_once(':') {
            Some((kind @ ("hubbard-dimer" | "random"), params)) => (kind, params),
            _ => return Ok(InputArgs { fcidump: Some(PathBuf::from(&self.source)), ..InputArgs::default() }),
        };
        let mut args = InputArgs {
            toy: Some(if kind == "random" { Toy::Random } else { Toy::HubbardDimer }),
            ..InputArgs::default()
        };
        for pair in params.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| invalid(&format!("item '{}': expected key=value, got '{pair}'", self.label)))?;
            let bad = || invalid(&format!("item '{}': bad value '{value}' for {key}", self.label));
            match key {
                "t" => args.hop = Some(value.parse().map_err(|_| bad())?),
                "U" => args.onsite = Some(value.parse().map_err(|_| bad())?),
                "seed" => args.seed = Some(value.parse().map_err(|_| bad())?),
                "norb" => args.norb = Some(value.parse().map_err(|_| bad())?),
                "nelec" => args.nelec = Some(value.parse().map_err(|_| bad())?),
                "scale" => args.scale = Some(value.parse().map_err(|_| bad())?),
                _ => return Err(invalid(&format!("item '{}': unknown parameter '{key}'", self.label))),
            }
        }
        Ok(args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_source() {
        assert!(InputArgs::default().load().is_err());
        let both = InputArgs { fcidump: Some("x".into()), toy: Some(Toy::Random), ..Default::default() };
        assert!(both.load().is_err());
    }

    #[test]
    fn toy_parameters_checked_per_model() {
        let wrong = InputArgs { toy: Some(Toy::HubbardDimer), norb: Some(4), ..Default::default() };
        assert!(wrong.load().is_err());
        let missing = InputArgs { toy: Some(Toy::Random), norb: Some(4), ..Default::default() };
        assert!(missing.load().is_err());
        let ok = InputArgs { toy: Some(Toy::HubbardDimer), ..Default::default() };
        assert_eq!(ok.load().unwrap().0, "hubbard-dimer:t=1,U=4");
    }

    #[test]
    fn item_sources() {
        let item: Item = "u4=hubbard-dimer:t=1,U=4".parse().unwrap();
        assert_eq!(item.label, "u4");
        let args = item.input().unwrap();
        assert_eq!((args.hop, args.onsite), (Some(1.0), Some(4.0)));
        let file: Item = "r1=geoms/n2_1.1.dump".parse().unwrap();
        assert_eq!(file.input().unwrap().fcidump, Some(PathBuf::from("geoms/n2_1.1.dump")));
        assert!("nolabel".parse::<Item>().is_err());
        let bad: Item = "x=random:seed=1,bogus=2".parse().unwrap();
        assert!(bad.input().is_err());
    }
}
