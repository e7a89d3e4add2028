"""
Kasamawashi — Interfaces Module
"""
