#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import random
from datetime import datetime


class OutputManager:
    """结果文件管理类，用于管理仿真输出的CSV文件"""

    def __init__(self, base_dir=None):
        """初始化结果文件管理器

        Args:
            base_dir: 结果文件基础目录，如果为None则使用项目根目录下的results
        """
        if base_dir is None:
            self.base_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'results')
        else:
            self.base_dir = base_dir

    def create_session_dir(self):
        """创建会话目录，用于存储单次运行的全部结果

        Returns:
            str: 会话目录路径
        """
        # 使用日期_时间_5位随机数格式创建唯一的会话目录名
        random_number = random.randint(10000, 99999)
        session_id = f"{datetime.now().strftime('%Y%m%d_%H%M%S')}_{random_number}"
        session_dir = os.path.join(self.base_dir, session_id)

        os.makedirs(session_dir, exist_ok=True)

        return session_dir

    def resolve_path(self, out_path, default_name):
        """确定输出文件路径

        Args:
            out_path: 用户指定的输出路径，为None时在新的会话目录中生成
            default_name: 默认文件名，如 'snr.csv'

        Returns:
            str: 输出文件路径
        """
        if out_path:
            parent = os.path.dirname(os.path.abspath(out_path))
            os.makedirs(parent, exist_ok=True)
            return out_path
        return os.path.join(self.create_session_dir(), default_name)

    def save_table(self, table, out_path=None, default_name='results.csv'):
        """保存结果表为CSV（UTF-8，逗号分隔，带表头，'.'小数点）

        Args:
            table: pandas.DataFrame
            out_path: 输出路径
            default_name: 未指定输出路径时使用的文件名

        Returns:
            str: 保存的文件路径
        """
        file_path = self.resolve_path(out_path, default_name)
        table.to_csv(file_path, index=False, encoding='utf-8')
        return file_path
