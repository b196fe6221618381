//! Wire formats for frames, scenarios and measurement schemes.

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QrfError, Result};
use crate::framechange::MultiFrameScenario;
use crate::group::{builtin_group, CosetSpace, FiniteGroup, GroupJson, Subgroup, BUILTIN_GROUPS};
use crate::measurement::MeasurementScheme;
use crate::operator::{Operator, OperatorJson};
use crate::quantum::{classify_frame, standard_system_rep, Frame, FrameFlags, Povm, SampleSpace, UnitaryRep};
use crate::scalar::Real;

/// A built-in group name (optionally prefixed `builtin:`), a path to a group JSON file,
/// or an inline Cayley table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSource {
    Name(String),
    Table(GroupJson),
}

impl GroupSource {
    pub fn build(&self) -> Result<FiniteGroup> {
        match self {
            Self::Name(n) => load_group(n),
            Self::Table(t) => t.clone().into_group(),
        }
    }
}

/// Resolves `builtin:<name>`, a bare built-in name, or a path to a group JSON file.
pub fn load_group(source: &str) -> Result<FiniteGroup> {
    if source.starts_with("builtin:") || BUILTIN_GROUPS.contains(&source) {
        return builtin_group(source);
    }
    let path = std::path::Path::new(source);
    if !path.exists() {
        return Err(QrfError::Argument(format!("'{source}' is neither a built-in group nor a readable file")));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| QrfError::Argument(format!("cannot read group file '{source}': {e}")))?;
    serde_json::from_str::<GroupJson>(&text)?.into_group()
}

/// Complex vector as separate real and imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl VectorJson {
    pub fn to_vector<T: Real>(&self) -> Result<DVector<Complex<T>>> {
        if !self.im.is_empty() && self.im.len() != self.re.len() {
            return Err(QrfError::Argument(format!(
                "vector JSON: 're' has {} entries but 'im' has {}",
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(DVector::from_fn(self.re.len(), |i, _| {
            Complex::new(T::lit(self.re[i]), T::lit(self.im.get(i).copied().unwrap_or(0.0)))
        }))
    }
}

/// Representation: `"left_regular"`, `"left_right"`, `"standard"`, `"trivial"`,
/// `{"quasi_regular": [subgroup]}` or `{"matrices": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepJson {
    LeftRegular,
    LeftRight,
    /// The default system representation; needs a dimension.
    Standard,
    /// Needs a dimension.
    Trivial,
    QuasiRegular(Vec<usize>),
    Matrices(Vec<OperatorJson>),
}

impl RepJson {
    pub fn build<T: Real>(&self, group: &FiniteGroup, dim: Option<usize>) -> Result<UnitaryRep<T>> {
        let need = |kind: &str| dim.ok_or_else(|| QrfError::Argument(format!("'{kind}' representation needs a dimension")));
        let rep = match self {
            Self::LeftRegular => UnitaryRep::left_regular(group),
            Self::LeftRight => UnitaryRep::left_right(group),
            Self::Standard => standard_system_rep(group, need("standard")?)?,
            Self::Trivial => UnitaryRep::trivial(group, need("trivial")?),
            Self::QuasiRegular(subgroup) => UnitaryRep::quasi_regular(&CosetSpace::new(&Subgroup::new(group, subgroup)?)),
            Self::Matrices(ms) => UnitaryRep::new(group, ms.iter().map(OperatorJson::to_operator).collect::<Result<Vec<_>>>()?)?,
        };
        if let Some(d) = dim.filter(|&d| d != rep.dim()) {
            return Err(QrfError::Argument(format!("representation has dimension {} but {d} was declared", rep.dim())));
        }
        Ok(rep)
    }
}

/// Sample space: `"group"`, `"points"` or `{"coset_subgroup": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceJson {
    Group,
    Points,
    CosetSubgroup(Vec<usize>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmJson {
    pub space: SpaceJson,
    pub effects: Vec<OperatorJson>,
}

impl PovmJson {
    pub fn build<T: Real>(&self, group: Option<&FiniteGroup>) -> Result<Povm<T>> {
        let effects = self.effects.iter().map(OperatorJson::to_operator).collect::<Result<Vec<Operator<T>>>>()?;
        let no_group = || QrfError::Argument("POVM JSON: a group sample space needs a group".into());
        let space = match &self.space {
            SpaceJson::Group => SampleSpace::Group(group.ok_or_else(no_group)?.clone()),
            SpaceJson::Points => SampleSpace::Points(effects.len()),
            SpaceJson::CosetSubgroup(h) => SampleSpace::Cosets(CosetSpace::new(&Subgroup::new(group.ok_or_else(no_group)?, h)?)),
        };
        Povm::new(space, effects)
    }
}

impl<T: Real> From<&Povm<T>> for PovmJson {
    fn from(p: &Povm<T>) -> Self {
        let space = match p.space() {
            SampleSpace::Group(_) => SpaceJson::Group,
            SampleSpace::Points(_) => SpaceJson::Points,
            SampleSpace::Cosets(c) => SpaceJson::CosetSubgroup(c.subgroup().members().to_vec()),
        };
        Self { space, effects: p.effects().iter().map(Into::into).collect() }
    }
}

/// A frame: representation plus explicit POVM, a coherent seed, or (neither) the canonical PVM.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameJson {
    /// Required for a standalone frame; inside a scenario it defaults to the scenario's group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSource>,
    pub rep: RepJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PovmJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent_seed: Option<VectorJson>,
}

impl FrameJson {
    /// Builds a standalone frame from its own `group` field.
    pub fn build<T: Real>(&self) -> Result<Frame<T>> {
        let group = self.group.as_ref().ok_or_else(|| QrfError::Argument("frame JSON needs a 'group'".into()))?.build()?;
        self.build_in(&group)
    }

    /// Builds the frame over `group`; an explicit `group` field must agree with it.
    pub fn build_in<T: Real>(&self, group: &FiniteGroup) -> Result<Frame<T>> {
        if let Some(own) = &self.group {
            if &own.build()? != group {
                return Err(QrfError::Argument("frame group differs from the scenario group".into()));
            }
        }
        let rep = self.rep.build::<T>(group, self.dim)?;
        match (&self.povm, &self.coherent_seed) {
            (Some(_), Some(_)) => Err(QrfError::Argument("frame JSON: give either 'povm' or 'coherent_seed'".into())),
            (None, None) => Frame::canonical(&rep),
            (None, Some(seed)) => Frame::coherent(&rep, &seed.to_vector()?),
            (Some(povm), None) => classify_frame(&rep, &povm.build(Some(group))?),
        }
    }
}

/// Summary of a constructed frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub dim: usize,
    pub outcomes: usize,
    pub flags: FrameFlags,
    pub isotropy: Vec<usize>,
}

impl<T: Real> From<&Frame<T>> for FrameReport {
    fn from(f: &Frame<T>) -> Self {
        Self { dim: f.dim(), outcomes: f.povm().len(), flags: f.flags(), isotropy: f.isotropy().members().to_vec() }
    }
}

fn default_system_rep() -> RepJson {
    RepJson::Standard
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemJson {
    #[serde(default = "default_system_rep")]
    pub rep: RepJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Frames R_1..R_N and a system over one group, with the seed for sampled checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub group: GroupSource,
    pub frames: Vec<FrameJson>,
    pub system: SystemJson,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioJson {
    pub fn build<T: Real>(&self) -> Result<MultiFrameScenario<T>> {
        let group = self.group.build()?;
        let frames = self.frames.iter().map(|f| f.build_in(&group)).collect::<Result<Vec<_>>>()?;
        MultiFrameScenario::new(frames, self.system.rep.build(&group, self.system.dim)?)
    }
}

/// Measurement scheme fields; `outcome_map` is an index array.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeJson {
    /// Needed when either POVM uses a group or coset sample space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSource>,
    pub interaction: OperatorJson,
    pub pointer_povm: PovmJson,
    pub pointer_state: OperatorJson,
    pub outcome_map: Vec<usize>,
    pub target: PovmJson,
    #[serde(default)]
    pub require_surjective: bool,
}

impl SchemeJson {
    pub fn build<T: Real>(&self) -> Result<MeasurementScheme<T>> {
        let group = self.group.as_ref().map(GroupSource::build).transpose()?;
        let scheme = MeasurementScheme::new(
            self.interaction.to_operator()?,
            self.pointer_povm.build(group.as_ref())?,
            self.pointer_state.to_operator()?,
            self.outcome_map.clone(),
            self.target.build(group.as_ref())?,
        )?;
        if self.require_surjective {
            scheme.require_surjective()
        } else {
            Ok(scheme)
        }
    }
}

impl<T: Real> From<&MeasurementScheme<T>> for SchemeJson {
    fn from(s: &MeasurementScheme<T>) -> Self {
        let group = s.pointer().space().group().or(s.target().space().group()).map(|g| GroupSource::Table(GroupJson::from(g)));
        Self {
            group,
            interaction: s.interaction().into(),
            pointer_povm: s.pointer().into(),
            pointer_state: s.pointer_state().into(),
            outcome_map: s.outcome_map().to_vec(),
            target: s.target().into(),
            require_surjective: false,
        }
    }
}
