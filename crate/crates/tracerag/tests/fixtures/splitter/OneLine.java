package o;public class d{static int a;static{a=1;}public d(){}int a(int i){return i+a;}static final class e{void f(){if(a>0){a--;}}}private static String g(String s,char c){return s+c;}}
