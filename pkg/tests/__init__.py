"""
Moduł inicjalizacyjny dla testów.
"""
