#!/usr/bin/env python3
"""CLI wrapper for cdal.simulation.runner"""
import os, sys, runpy

repo_root = os.path.dirname(os.path.abspath(__file__))  # cli/
repo_root = os.path.dirname(repo_root)                  # repo/
if repo_root not in sys.path:
    sys.path.insert(0, repo_root)

if __name__ == "__main__":
    runpy.run_module("src.cdal.simulation.runner", run_name="__main__")
