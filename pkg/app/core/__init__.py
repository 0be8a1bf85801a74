"""
Core configuration and settings for the droop simulator
"""
