"""Torsion-deformable two-node spatial beam element (14 DOF) with
Bishop-frame kinematics, plus multibody assembly, solvers and a
benchmark CLI."""

__version__ = "0.1.0"
