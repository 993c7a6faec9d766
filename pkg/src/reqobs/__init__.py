"""Requirements observability toolkit.

Classify requirements as satisfiable/falsifiable, monitor them over timed
traces, pick designated sets from AND-OR goal models, and analyse
machine- and mode-switching adaptive systems.
"""
__version__ = "0.1.0"
