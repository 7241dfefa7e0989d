"""Configuration: YAML engine defaults and the experiment schema"""
