#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
utils包，包含项目中使用的通用工具类
"""

from utils.logger import Logger
from utils.output_manager import OutputManager
from utils.config_loader import ConfigLoader

__all__ = ['Logger', 'OutputManager', 'ConfigLoader']
