# 패키지 초기화 파일
__version__ = "0.1.0"
