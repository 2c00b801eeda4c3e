"""Machine and library information recorded in bench reports."""

import platform
from importlib import metadata
from typing import Any, Dict

import psutil


def get_system_info() -> Dict[str, Any]:
    """Get system information for bench reports: CPU, memory, OS and library versions"""
    info = {
        "cpu": platform.processor() or platform.machine() or "Unknown CPU",
        "cores": psutil.cpu_count(logical=False) or psutil.cpu_count() or 1,
        "memory": f"{round(psutil.virtual_memory().total / (1024**3))} GB",
        "os": f"{platform.system()} {platform.release()}",
        "python": platform.python_version(),
    }

    for package in ("numpy", "sympy", "pydantic"):
        try:
            info[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            info[package] = "not installed"

    return info


def get_memory_usage() -> float:
    """Resident memory of this process in MB"""
    return round(psutil.Process().memory_info().rss / (1024**2), 1)
