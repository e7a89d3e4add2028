"""
Kasamawashi — Mechanics Module
"""
