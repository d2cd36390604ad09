"""Plug-and-play benchmark orchestration for Hadoop/Spark clusters.

The pipeline runs in four steps: detect the cluster environment, render a
container recipe, configure and execute workloads, then price the runs.
"""

__version__ = "0.1.0"
