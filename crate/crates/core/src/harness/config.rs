use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::infotheory::ReturnBinning;
use crate::learners::LearnerConfig;

/// Population used for the prisoner's dilemma when `n_agents` is absent.
pub const DEFAULT_IPD_POPULATION: usize = 30;
/// Episodes between metric checkpoints.
pub const CHECKPOINT_EVERY: usize = 10;

/// Every key the config format accepts.
pub const KEYS: [&str; 19] = [
    "env",
    "n_agents",
    "team_sizes",
    "trials",
    "episodes",
    "steps_per_episode",
    "gamma",
    "alpha",
    "epsilon_explore",
    "reward_r",
    "slip_prob",
    "ipd_cost",
    "ipd_benefit",
    "ipd_nu",
    "info_horizon",
    "bin_width",
    "info_rollouts",
    "seed",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    /// Population size; `None` means one team of each swept size for the
    /// signal games and [`DEFAULT_IPD_POPULATION`] for the dilemma.
    pub n_agents: Option<usize>,
    pub team_sizes: Vec<usize>,
    pub trials: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub learner: LearnerConfig,
    pub reward_r: f64,
    pub slip_prob: f64,
    pub ipd_cost: f64,
    pub ipd_benefit: f64,
    pub ipd_nu: f64,
    pub info_horizon: usize,
    /// Return bin width; `None` means `r / (4·max team size)`.
    pub bin_width: Option<f64>,
    /// Return windows per info probe; 0 disables the probe.
    pub info_rollouts: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub checkpoint_every: usize,
}

impl ExperimentConfig {
    /// Defaults for an environment, following the published protocol where
    /// one exists.
    pub fn defaults(env: EnvKind) -> Self {
        let team_sizes = match env {
            EnvKind::Ipd => vec![1, 2, 5, 10, 15, 30],
            _ => vec![1, 2, 4, 8, 16],
        };
        ExperimentConfig {
            env,
            n_agents: None,
            team_sizes,
            trials: 50,
            episodes: 1000,
            steps_per_episode: 100,
            learner: LearnerConfig::default(),
            reward_r: 1.0,
            slip_prob: 0.1,
            ipd_cost: 1.0,
            ipd_benefit: 5.0,
            ipd_nu: 0.97,
            info_horizon: 50,
            bin_width: None,
            info_rollouts: 20_000,
            seed: 0,
            out_dir: PathBuf::from("out"),
            checkpoint_every: CHECKPOINT_EVERY,
        }
    }

    /// Population for a given team size.
    pub fn population_for(&self, team_size: usize) -> usize {
        match (self.n_agents, self.env) {
            (Some(n), _) => n,
            (None, EnvKind::Ipd) => DEFAULT_IPD_POPULATION,
            (None, _) => team_size,
        }
    }

    pub fn max_team_size(&self) -> usize {
        self.team_sizes.iter().copied().max().unwrap_or(1)
    }

    pub fn return_binning(&self) -> Result<ReturnBinning> {
        match self.bin_width {
            Some(w) => ReturnBinning::new(w),
            None => {
                let scale = match self.env {
                    EnvKind::Ipd => self.ipd_benefit,
                    _ => self.reward_r,
                };
                ReturnBinning::for_team_lattice(scale, self.max_team_size())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.team_sizes.is_empty() {
            bad.push("team_sizes must list at least one size".into());
        }
        if self.team_sizes.contains(&0) {
            bad.push("team sizes must be positive".into());
        }
        let mut seen = BTreeSet::new();
        for &n in &self.team_sizes {
            if !seen.insert(n) {
                bad.push(format!("team size {n} listed twice"));
            }
        }
        if self.trials == 0 {
            bad.push("trials must be positive".into());
        }
        if self.episodes == 0 {
            bad.push("episodes must be positive".into());
        }
        if self.steps_per_episode == 0 {
            bad.push("steps_per_episode must be positive".into());
        }
        if self.checkpoint_every == 0 {
            bad.push("checkpoint cadence must be positive".into());
        }
        if let Err(Error::Validation(v)) = self.learner.validate() {
            bad.extend(v);
        }
        if !(self.reward_r > 0.0) {
            bad.push(format!("reward_r must be positive, got {}", self.reward_r));
        }
        if !(0.0..=1.0).contains(&self.slip_prob) {
            bad.push(format!("slip_prob must be in [0, 1], got {}", self.slip_prob));
        }
        if self.env == EnvKind::Ipd {
            if !(self.ipd_cost > 0.0 && self.ipd_benefit > self.ipd_cost) {
                bad.push(format!(
                    "ipd needs ipd_benefit > ipd_cost > 0, got cost {} benefit {}",
                    self.ipd_cost, self.ipd_benefit
                ));
            }
            if !(0.0..=1.0).contains(&self.ipd_nu) {
                bad.push(format!("ipd_nu must be in [0, 1], got {}", self.ipd_nu));
            }
        }
        if self.info_horizon == 0 {
            bad.push("info_horizon must be positive".into());
        }
        if let Some(w) = self.bin_width {
            if !(w > 0.0) {
                bad.push(format!("bin_width must be positive, got {w}"));
            }
        }
        if let Some(n) = self.n_agents {
            if n == 0 {
                bad.push("n_agents must be positive".into());
            }
            for &t in &self.team_sizes {
                if t > 0 && n > 0 && n % t != 0 {
                    bad.push(format!("team size {t} does not divide n_agents {n}"));
                }
            }
        }
        if self.env == EnvKind::Ipd {
            for &t in &self.team_sizes {
                let pop = self.population_for(t);
                if pop < 2 {
                    bad.push(format!("ipd needs at least 2 agents, got {pop}"));
                } else if self.n_agents.is_none() && t > 0 && pop % t != 0 {
                    bad.push(format!("team size {t} does not divide the ipd population {pop}"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Canonical text form; loading it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sizes: Vec<String> = self.team_sizes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "env = {}", self.env.name());
        if let Some(n) = self.n_agents {
            let _ = writeln!(s, "n_agents = {n}");
        }
        let _ = writeln!(s, "team_sizes = {}", sizes.join(","));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "episodes = {}", self.episodes);
        let _ = writeln!(s, "steps_per_episode = {}", self.steps_per_episode);
        let _ = writeln!(s, "gamma = {}", self.learner.gamma);
        let _ = writeln!(s, "alpha = {}", self.learner.alpha);
        let _ = writeln!(s, "epsilon_explore = {}", self.learner.epsilon);
        let _ = writeln!(s, "reward_r = {}", self.reward_r);
        let _ = writeln!(s, "slip_prob = {}", self.slip_prob);
        let _ = writeln!(s, "ipd_cost = {}", self.ipd_cost);
        let _ = writeln!(s, "ipd_benefit = {}", self.ipd_benefit);
        let _ = writeln!(s, "ipd_nu = {}", self.ipd_nu);
        let _ = writeln!(s, "info_horizon = {}", self.info_horizon);
        if let Some(w) = self.bin_width {
            let _ = writeln!(s, "bin_width = {w}");
        }
        let _ = writeln!(s, "info_rollouts = {}", self.info_rollouts);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        s
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_int(line: usize, key: &str, v: &str) -> Result<i64> {
    v.parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("{key}: expected an integer, got {v:?}"),
    })
}

fn parse_float(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = v.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("{key}: expected a number, got {v:?}"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{key}: value must be finite"),
        });
    }
    Ok(x)
}

/// Negative counts become validation errors, not parse errors.
fn count(key: &str, x: i64, bad: &mut Vec<String>) -> usize {
    if x < 0 {
        bad.push(format!("{key} must be non-negative, got {x}"));
        0
    } else {
        x as usize
    }
}

/// Parses the flat `key = value` format. `#` starts a comment; blank lines
/// are ignored; unknown and repeated keys are rejected.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected key = value, got {body:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Parse {
                line,
                message: format!("unknown key {k:?}"),
            });
        }
        if !seen.insert(k.to_string()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key {k:?}"),
            });
        }
        if v.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("{k}: missing value"),
            });
        }
        pairs.push((line, k.to_string(), v.to_string()));
    }

    let (env_line, env_value) = pairs
        .iter()
        .find(|(_, k, _)| k == "env")
        .map(|(l, _, v)| (*l, v.clone()))
        .ok_or_else(|| Error::Validation(vec!["missing required key env".into()]))?;
    let env = EnvKind::parse(&env_value).ok_or_else(|| Error::Parse {
        line: env_line,
        message: format!("env must be twostates, fourstates or ipd, got {env_value:?}"),
    })?;

    let mut cfg = ExperimentConfig::defaults(env);
    let mut bad = Vec::new();
    for (line, k, v) in &pairs {
        let line = *line;
        let v = v.as_str();
        match k.as_str() {
            "env" => {}
            "n_agents" => cfg.n_agents = Some(count(k, parse_int(line, k, v)?, &mut bad)),
            "team_sizes" => {
                let mut sizes = Vec::new();
                for part in v.trim_matches(|c| c == '[' || c == ']').split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    sizes.push(count("team size", parse_int(line, k, part)?, &mut bad));
                }
                cfg.team_sizes = sizes;
            }
            "trials" => cfg.trials = count(k, parse_int(line, k, v)?, &mut bad),
            "episodes" => cfg.episodes = count(k, parse_int(line, k, v)?, &mut bad),
            "steps_per_episode" => cfg.steps_per_episode = count(k, parse_int(line, k, v)?, &mut bad),
            "gamma" => cfg.learner.gamma = parse_float(line, k, v)?,
            "alpha" => cfg.learner.alpha = parse_float(line, k, v)?,
            "epsilon_explore" => cfg.learner.epsilon = parse_float(line, k, v)?,
            "reward_r" => cfg.reward_r = parse_float(line, k, v)?,
            "slip_prob" => cfg.slip_prob = parse_float(line, k, v)?,
            "ipd_cost" => cfg.ipd_cost = parse_float(line, k, v)?,
            "ipd_benefit" => cfg.ipd_benefit = parse_float(line, k, v)?,
            "ipd_nu" => cfg.ipd_nu = parse_float(line, k, v)?,
            "info_horizon" => cfg.info_horizon = count(k, parse_int(line, k, v)?, &mut bad),
            "bin_width" => cfg.bin_width = Some(parse_float(line, k, v)?),
            "info_rollouts" => cfg.info_rollouts = count(k, parse_int(line, k, v)?, &mut bad),
            "seed" => {
                cfg.seed = v.parse::<u64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("seed: expected a non-negative integer, got {v:?}"),
                })?
            }
            "out_dir" => cfg.out_dir = PathBuf::from(v),
            _ => unreachable!("keys checked above"),
        }
    }
    if !bad.is_empty() {
        if let Err(Error::Validation(more)) = cfg.validate() {
            for m in more {
                if !bad.contains(&m) {
                    bad.push(m);
                }
            }
        }
        return Err(Error::Validation(bad));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_published_defaults() {
        let c = load_config("env = fourstates\n").unwrap();
        assert_eq!(c.learner.gamma, 0.9);
        assert_eq!(c.learner.epsilon, 0.3);
        assert_eq!(c.trials, 50);
        assert_eq!((c.episodes, c.steps_per_episode), (1000, 100));
        assert_eq!(c.checkpoint_every, 10);
    }

    #[test]
    fn ipd_divisibility_checked() {
        let e = load_config("env = ipd\nn_agents = 4\nteam_sizes = 3\n").unwrap_err();
        match e {
            Error::Validation(v) => assert!(v.iter().any(|m| m.contains("does not divide"))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_trials_is_a_validation_error() {
        assert!(matches!(
            load_config("env = twostates\ntrials = -3\n"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn unknown_key_reports_line() {
        match load_config("env = twostates\n\nlearning_rate = 0.1\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("learning_rate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_values_rejected() {
        assert!(matches!(load_config("env = twostates\ngamma = high\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_config("env = mars\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_config("env = ipd\nenv = ipd\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_config("trials = 3\n"), Err(Error::Validation(_))));
        assert!(matches!(load_config("env twostates\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn violations_are_enumerated() {
        match load_config("env = twostates\ngamma = 1.5\nalpha = 0\ntrials = 0\n") {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_text_roundtrips() {
        let text = "env = ipd # comment\nteam_sizes = [1, 2, 5]\nepsilon_explore = 0.1\nbin_width = 0.05\nseed = 42\n";
        let c = load_config(text).unwrap();
        assert_eq!(c.team_sizes, vec![1, 2, 5]);
        let again = load_config(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn population_defaults() {
        let c = load_config("env = twostates\nteam_sizes = 1,2\n").unwrap();
        assert_eq!(c.population_for(2), 2);
        let c = load_config("env = ipd\n").unwrap();
        assert_eq!(c.population_for(2), 30);
        let c = load_config("env = fourstates\nn_agents = 8\nteam_sizes = 2,4\n").unwrap();
        assert_eq!(c.population_for(2), 8);
    }
}
