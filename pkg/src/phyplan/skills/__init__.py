from phyplan.skills.data import CollocationSet, Dataset, sample_collocation
from phyplan.skills.model import (
    InputScaler,
    SkillModel,
    TrainingReport,
    data_loss,
    identify_parameter,
    physics_loss,
    predict,
    total_loss,
    train,
)
from phyplan.skills.spec import (
    GRAVITY,
    SKILL_NAMES,
    DataOnlySkillError,
    PhysicalParam,
    SkillSpec,
    UnknownSkillError,
    build_skill,
    physics_residual,
)

__all__ = [
    "GRAVITY",
    "SKILL_NAMES",
    "CollocationSet",
    "DataOnlySkillError",
    "Dataset",
    "InputScaler",
    "PhysicalParam",
    "SkillModel",
    "SkillSpec",
    "TrainingReport",
    "UnknownSkillError",
    "build_skill",
    "data_loss",
    "identify_parameter",
    "physics_loss",
    "physics_residual",
    "predict",
    "sample_collocation",
    "total_loss",
    "train",
]
