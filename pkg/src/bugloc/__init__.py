"""Semantic bug localization for small C programs.

Trains a tree convolutional network to predict per-test pass/fail from
program syntax alone, then attributes failure predictions back to source
lines with integrated gradients against a nearest correct program.
Spectrum-based (Tarantula/Ochiai) and diff-based baselines plus a
ground-truth harness round out the toolkit.
"""

__version__ = "0.1.0"
