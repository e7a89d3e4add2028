"""
Kasamawashi — Utils Module
"""
