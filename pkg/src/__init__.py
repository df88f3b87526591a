# このファイルは sketch-bench パッケージを認識するためのものです。
