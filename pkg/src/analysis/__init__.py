"""
Kasamawashi — Analysis Module
"""
