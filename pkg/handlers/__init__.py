# 핸들러 패키지 초기화
