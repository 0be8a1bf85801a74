"""
Droop-adaptive clock simulator application
"""
