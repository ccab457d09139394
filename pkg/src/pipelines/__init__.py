from src.pipelines.asymptotics import AsymptoticsPipeline
from src.pipelines.base_pipeline import BaseExperimentPipeline, ExperimentOutcome
from src.pipelines.branches import BranchesPipeline
from src.pipelines.census import CensusPipeline
from src.pipelines.certificate import CertificatePipeline
from src.pipelines.continuity_probe import ContinuityProbePipeline
from src.pipelines.domain_hole import DomainHolePipeline
from src.pipelines.eigen import EigenPipeline
from src.pipelines.structure_check import StructureCheckPipeline
from src.pipelines.tstar import TStarPipeline

# Order of execution in a full_suite run
PIPELINES = {
    cls.kind: cls
    for cls in (
        StructureCheckPipeline,
        EigenPipeline,
        TStarPipeline,
        BranchesPipeline,
        CensusPipeline,
        AsymptoticsPipeline,
        DomainHolePipeline,
        CertificatePipeline,
        ContinuityProbePipeline,
    )
}
