"""
Kasamawashi — качение шара по вращающейся поверхности вращения
"""
