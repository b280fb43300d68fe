"""
Incremental WCET Analyzer
Anytime worst-case execution time bounds over small transition systems,
refined by symbolic execution on top of abstract interpretation.
"""

# Version
VERSION = "0.4.0"
