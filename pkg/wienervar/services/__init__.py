from .descriptor_service import descriptor_service
from .experiment_runner import experiment_runner

__all__ = ["descriptor_service", "experiment_runner"]
